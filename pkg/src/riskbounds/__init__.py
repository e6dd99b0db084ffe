"""Excess-risk bounds, margin geometry, and data-split model selection
on finite sample spaces, with Monte Carlo coverage verification."""

from .bounds import (
    BoundParams,
    ConditionCheck,
    ExcessRiskBound,
    bernstein_threshold,
    bousquet_threshold,
    check_deviation_norm_bound,
    check_norm_margin_bound,
    critical_norm_radius,
    excess_risk_bound,
    interpolate_parameters,
    norm_radius,
    ratio_statistic,
)
from .config import ConfigError, ExperimentConfig, emit_config, load_config, loads_config
from .margin import (
    MarginProfile,
    deviation_budget,
    increasing_concave_majorant,
    invert_increasing,
    legendre_conjugate,
    margin_envelope,
    margin_profile,
    margin_radius,
)
from .measures import (
    DiscreteDistribution,
    EmpiricalMeasure,
    FunctionClass,
    LossFunction,
    ParameterNorm,
    Sample,
    empirical_mean,
    erm,
    excess_risk,
    mean,
    rescale_to_unit,
    risk_minimizer,
    sup_norm_dev,
    variance,
)
from .montecarlo import (
    CoverageReport,
    EZEstimate,
    StreamKey,
    TrialRecord,
    build_bound_pipeline,
    draw_sample,
    estimate_EZ,
    realized_Z,
    run_suite,
)
from .selection import (
    ModelFamily,
    ModelFit,
    PenaltySchedule,
    SelectionResult,
    centering_allowance,
    cross_sample_gap,
    default_t_schedule,
    fit_models,
    oracle_inequality_check,
    penalty_schedule,
    penalty_validity_event,
    select_model,
    split_allowance,
    split_event_check,
)
from .tabulated import TabulatedFunction

__version__ = "0.1.0"
