"""Trial orchestration: seeded streams, supremum estimation, coverage suites.

Every random draw comes from a counter-based stream keyed by
(master seed, trial index, role), so results are reproducible under any
worker schedule.  The expected-supremum estimate uses its own role and is
inflated by two standard errors before entering the bound pipeline, keeping
the majorant an upper bound with high confidence.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import (
    BoundParams,
    ConditionCheck,
    ExcessRiskBound,
    check_deviation_norm_bound,
    check_norm_margin_bound,
    critical_norm_radius,
    excess_risk_bound,
    norm_radius,
    tail_bound,
)
from .config import ConfigError, ExperimentConfig
from .fixtures import ExperimentBundle, build_bundle
from .margin import (
    compose_on_grid,
    deviation_budget,
    increasing_concave_majorant,
    invert_increasing,
    legendre_conjugate,
    majorant_knots,
    margin_envelope,
    margin_radius,
)
from .measures import (
    DiscreteDistribution,
    EmpiricalMeasure,
    FunctionClass,
    Sample,
    risk_minimizer,
)
from .selection import (
    ModelFamily,
    centering_allowance,
    fit_models,
    oracle_inequality_check,
    penalty_schedule,
    penalty_validity_event,
    select_model,
    split_allowance,
    split_event_check,
)
from .tabulated import TabulatedFunction

ROLE_PRIMARY = 0
ROLE_SPLIT = 1
ROLE_EZ = 2

CLASS_SUITES = ("ratio", "erm", "convex")
MODEL_SUITES = ("split", "oracle")


@dataclass(frozen=True)
class StreamKey:
    """Identifies one RNG stream by (master seed, trial index, role)."""

    master_seed: int
    trial: int
    role: int

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence((self.master_seed, self.trial, self.role))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed_sequence()))

    def provenance(self) -> int:
        return int(self.seed_sequence().generate_state(1, np.uint64)[0])


def _draw_indices(cum_weights: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    idx = np.searchsorted(cum_weights, rng.random(n), side="right")
    return np.minimum(idx, cum_weights.size - 1)


def draw_sample(P: DiscreteDistribution, n: int, key: StreamKey) -> Sample:
    """n i.i.d. draws from P on the stream identified by key."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    idx = _draw_indices(np.cumsum(P.weights), n, key.generator())
    return Sample(idx, key.provenance())


def realized_Z(
    P: DiscreteDistribution,
    F: FunctionClass,
    Pn: EmpiricalMeasure,
    sigma_grid,
) -> np.ndarray:
    """Exhaustive supremum of centered deviations over nested sigma-balls.

    For each grid level the supremum runs over members within the unit
    deviation band whose deviation-std is at most the level; an empty ball
    contributes 0.
    """
    sigma_grid = np.asarray(sigma_grid, dtype=float)
    fbar = risk_minimizer(P, F)
    g = F.values - F.values[fbar]
    e = g @ P.weights
    dev = np.abs(g @ Pn.counts / Pn.n - e)
    second = (g * g) @ P.weights
    s = np.sqrt(np.maximum(second - e * e, 0.0))
    band = np.flatnonzero(np.max(np.abs(g), axis=1) <= 1.0 + 1e-12)
    order = band[np.argsort(s[band], kind="stable")]
    running = np.maximum.accumulate(dev[order])
    pos = np.searchsorted(s[order], sigma_grid, side="right") - 1
    return np.where(pos >= 0, running[np.clip(pos, 0, None)], 0.0)


@dataclass(frozen=True)
class EZEstimate:
    """Monte Carlo estimate of the expected supremum per sigma level."""

    grid: np.ndarray
    mean: np.ndarray
    std_error: np.ndarray
    reps: int

    def inflated(self, k: float = 2.0) -> TabulatedFunction:
        """Upper-confidence tabulation mean + k standard errors."""
        return TabulatedFunction(self.grid, self.mean + k * self.std_error, "clamp")

    def as_tabulated(self) -> TabulatedFunction:
        return TabulatedFunction(self.grid, self.mean, "clamp")


def estimate_EZ(
    P: DiscreteDistribution,
    F: FunctionClass,
    n: int,
    sigma_grid,
    reps: int,
    master_seed: int,
) -> EZEstimate:
    """Average realized suprema over independent samples on the dedicated role."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    sigma_grid = np.asarray(sigma_grid, dtype=float)
    cum = np.cumsum(P.weights)
    counts = np.empty((reps, P.n_states), dtype=np.int64)
    for r in range(reps):
        rng = StreamKey(master_seed, r, ROLE_EZ).generator()
        counts[r] = np.bincount(_draw_indices(cum, n, rng), minlength=P.n_states)

    fbar = risk_minimizer(P, F)
    g = F.values - F.values[fbar]
    e = g @ P.weights
    second = (g * g) @ P.weights
    s = np.sqrt(np.maximum(second - e * e, 0.0))
    band = np.flatnonzero(np.max(np.abs(g), axis=1) <= 1.0 + 1e-12)
    order = band[np.argsort(s[band], kind="stable")]

    dev = np.abs(counts @ g[order].T / n - e[order])  # reps x band members
    running = np.maximum.accumulate(dev, axis=1)
    pos = np.searchsorted(s[order], sigma_grid, side="right") - 1
    z = np.where(pos >= 0, running[:, np.clip(pos, 0, None)], 0.0)
    mean = z.mean(axis=0)
    if reps > 1:
        se = z.std(axis=0, ddof=1) / math.sqrt(reps)
    else:
        se = np.zeros_like(mean)
    return EZEstimate(sigma_grid, mean, se, reps)


@dataclass(frozen=True)
class BoundPipeline:
    """All tabulations from the expected supremum to the excess-risk bound."""

    radius: TabulatedFunction
    ez: EZEstimate
    ez_inflated: TabulatedFunction
    budget: TabulatedFunction
    budget_at_radius: TabulatedFunction
    majorant: TabulatedFunction
    conjugate: TabulatedFunction
    risk_bound: ExcessRiskBound
    envelope: TabulatedFunction
    envelope_conjugate: TabulatedFunction


def build_bound_pipeline(
    P: DiscreteDistribution,
    F: FunctionClass,
    params: BoundParams,
    delta_grid,
    sigma_grid,
    reps: int,
    master_seed: int,
) -> BoundPipeline:
    radius = margin_radius(P, F, delta_grid)
    ez = estimate_EZ(P, F, params.n, sigma_grid, reps, master_seed)
    ez_inflated = ez.inflated()
    budget = deviation_budget(ez_inflated, params.t, params.n)
    budget_at_radius = compose_on_grid(budget, radius)
    majorant = increasing_concave_majorant(budget_at_radius)
    # invert the knot form: the dense grid is cancellation-prone when flat
    inverse = invert_increasing(majorant_knots(budget_at_radius))
    v_grid = np.unique(np.concatenate(
        [np.linspace(0.0, 2.0 / params.eps, 129), [1.0 / params.eps]]
    ))
    conjugate = legendre_conjugate(inverse, v_grid)
    envelope = margin_envelope(P, F)
    env_vmax = max(envelope.max_slope, 1e-6)
    envelope_conjugate = legendre_conjugate(
        envelope, np.linspace(0.0, 1.5 * env_vmax, 65)
    )
    return BoundPipeline(
        radius=radius,
        ez=ez,
        ez_inflated=ez_inflated,
        budget=budget,
        budget_at_radius=budget_at_radius,
        majorant=majorant,
        conjugate=conjugate,
        risk_bound=excess_risk_bound(conjugate, params),
        envelope=envelope,
        envelope_conjugate=envelope_conjugate,
    )


@dataclass(frozen=True)
class ConvexDiagnostics:
    """Pre-flight checks for the convex-parametric guarantee."""

    deviation_check: ConditionCheck
    margin_check: ConditionCheck
    radius_fn: TabulatedFunction
    critical_radius: float
    eta_n: float
    contraction_ok: bool

    @property
    def ok(self) -> bool:
        return self.deviation_check.ok and self.margin_check.ok and self.contraction_ok


def convex_diagnostics(
    P: DiscreteDistribution,
    F: FunctionClass,
    eta_n: float,
    excess_bound_value: float,
) -> ConvexDiagnostics:
    radius_fn = norm_radius(P, F)
    deviation_check = check_deviation_norm_bound(P, F, eta_n)
    margin_check = check_norm_margin_bound(P, F, radius_fn)
    if math.isinf(excess_bound_value):
        critical = math.inf
    else:
        critical = critical_norm_radius(radius_fn, excess_bound_value)
    return ConvexDiagnostics(
        deviation_check=deviation_check,
        margin_check=margin_check,
        radius_fn=radius_fn,
        critical_radius=critical,
        eta_n=eta_n,
        contraction_ok=critical <= eta_n / 2.0,
    )


@dataclass(frozen=True)
class SelectionPipeline:
    """Envelopes and conjugates of the umbrella and each model, from P."""

    umbrella_envelope: TabulatedFunction
    umbrella_conjugate: TabulatedFunction
    model_envelopes: tuple[TabulatedFunction, ...]
    model_conjugates: tuple[TabulatedFunction, ...]


def build_selection_pipeline(
    P: DiscreteDistribution, family: ModelFamily, n: int
) -> SelectionPipeline:
    eps = family.eps
    alpha_args = [math.sqrt(t_k / (n * eps * eps)) for t_k in family.t_schedule]
    gamma_args = [math.sqrt(2.0 * t_k / (n * eps * eps)) for t_k in family.t_schedule]
    vmax = 1.5 * max(alpha_args + gamma_args)

    def conj_grid(extra):
        return np.unique(np.concatenate([np.linspace(0.0, vmax, 65), extra]))

    umbrella_envelope = margin_envelope(P, family.umbrella)
    umbrella_conjugate = legendre_conjugate(umbrella_envelope, conj_grid(alpha_args))
    model_envelopes = []
    model_conjugates = []
    for k, model in enumerate(family.models):
        env = margin_envelope(P, model)
        model_envelopes.append(env)
        model_conjugates.append(legendre_conjugate(env, conj_grid([gamma_args[k]])))
    return SelectionPipeline(
        umbrella_envelope=umbrella_envelope,
        umbrella_conjugate=umbrella_conjugate,
        model_envelopes=tuple(model_envelopes),
        model_conjugates=tuple(model_conjugates),
    )


@dataclass(frozen=True)
class TrialRecord:
    """Realized statistics and event outcomes of one trial."""

    index: int
    z: tuple[float, ...] | None = None
    ratio: float | None = None
    erm_index: int | None = None
    erm_excess: float | None = None
    events: dict | None = None
    model_fits: tuple[dict, ...] | None = None
    k_hat: int | None = None
    oracle_lhs: float | None = None
    oracle_rhs: float | None = None
    penalty_valid: bool | None = None

    def to_dict(self) -> dict:
        out = {"index": self.index}
        if self.z is not None:
            out["z"] = list(self.z)
        if self.ratio is not None:
            out["ratio"] = self.ratio
        if self.erm_index is not None:
            out["erm_index"] = self.erm_index
            out["erm_excess"] = self.erm_excess
        if self.events:
            out["events"] = dict(sorted(self.events.items()))
        if self.model_fits is not None:
            out["model_fits"] = list(self.model_fits)
            out["k_hat"] = self.k_hat
            out["oracle_lhs"] = self.oracle_lhs
            out["oracle_rhs"] = self.oracle_rhs
            out["penalty_valid"] = self.penalty_valid
        return out


def thin_indices(length: int, points: int) -> np.ndarray:
    pts = max(2, min(points, length))
    return np.unique(np.round(np.linspace(0, length - 1, pts)).astype(int))


@dataclass(frozen=True)
class TrialEngine:
    """Precomputed per-trial machinery; pure and picklable for worker pools."""

    P: DiscreteDistribution
    F: FunctionClass
    params: BoundParams
    suites: tuple[str, ...]
    master_seed: int
    cum_weights: np.ndarray
    # centered class statistics
    centered: np.ndarray
    excess: np.ndarray
    band: np.ndarray  # indices of members inside the unit deviation band
    # supremum recording on a thinned sigma grid
    z_sigma: np.ndarray
    z_order: np.ndarray
    z_pos: np.ndarray
    # normalized-ratio statistic
    ratio_delta: float
    ratio_denom: np.ndarray
    # per-level event series
    series_delta: np.ndarray
    # excess-risk bound event
    excess_bound_value: float
    # model selection
    family: ModelFamily | None = None
    selection: SelectionPipeline | None = None

    @property
    def runs_class_suites(self) -> bool:
        return any(s in self.suites for s in CLASS_SUITES)

    @property
    def runs_model_suites(self) -> bool:
        return any(s in self.suites for s in MODEL_SUITES)

    def run(self, indices) -> "ChunkResult":
        records: list[TrialRecord] = []
        violations = {s: 0 for s in self.suites}
        validity_failures = 0
        n_series = self.series_delta.size
        ratio_series = np.zeros(n_series, dtype=np.int64)
        erm_series = np.zeros(n_series, dtype=np.int64)

        e_band = self.excess[self.band]
        band_order = np.argsort(e_band, kind="stable")
        e_band_sorted = e_band[band_order]
        series_cut = np.searchsorted(e_band_sorted, self.series_delta, side="right")

        n = self.params.n
        q = self.params.q
        for i in indices:
            rec: dict = {"index": int(i)}
            events: dict = {}
            if self.runs_class_suites:
                rng = StreamKey(self.master_seed, int(i), ROLE_PRIMARY).generator()
                counts = np.bincount(
                    _draw_indices(self.cum_weights, n, rng), minlength=self.P.n_states
                )
                dev = np.abs(counts @ self.centered.T / n - self.excess)

                running = np.maximum.accumulate(dev[self.z_order])
                z_vals = np.where(
                    self.z_pos >= 0, running[np.clip(self.z_pos, 0, None)], 0.0
                )
                rec["z"] = tuple(float(v) for v in z_vals)

                ratios = dev / self.ratio_denom
                ratios_sorted = ratios[self.band][band_order]
                suffix = np.maximum.accumulate(ratios_sorted[::-1])[::-1]
                # statistic at each series level: suprema over members with excess > level
                stat_series = np.where(
                    series_cut < e_band_sorted.size,
                    suffix[np.minimum(series_cut, e_band_sorted.size - 1)],
                    0.0,
                )
                cut = int(np.searchsorted(e_band_sorted, self.ratio_delta, side="right"))
                stat = float(suffix[cut]) if cut < e_band_sorted.size else 0.0
                rec["ratio"] = stat

                f_hat = int(np.argmin(self.F.values @ counts))
                exc = float(self.excess[f_hat])
                rec["erm_index"] = f_hat
                rec["erm_excess"] = exc

                if "ratio" in self.suites:
                    viol = stat >= q
                    events["ratio"] = bool(viol)
                    violations["ratio"] += viol
                    ratio_series += stat_series >= q
                bound_event = exc > self.excess_bound_value
                for name in ("erm", "convex"):
                    if name in self.suites:
                        events[name] = bool(bound_event)
                        violations[name] += bound_event
                if "erm" in self.suites or "convex" in self.suites:
                    erm_series += exc > self.series_delta

            if self.runs_model_suites:
                key1 = StreamKey(self.master_seed, int(i), ROLE_PRIMARY)
                key2 = StreamKey(self.master_seed, int(i), ROLE_SPLIT)
                Pn = EmpiricalMeasure.from_sample(
                    draw_sample(self.P, n, key1), self.P.n_states
                )
                Pn2 = EmpiricalMeasure.from_sample(
                    draw_sample(self.P, n, key2), self.P.n_states
                )
                fits = fit_models(self.family, Pn, Pn2, self.P)
                pens = penalty_schedule(
                    self.family, fits, Pn, Pn2,
                    self.selection.umbrella_conjugate,
                    list(self.selection.model_conjugates),
                )
                sel = select_model(fits, pens, Pn)
                valid = penalty_validity_event(fits, pens, self.family.eps)
                validity_failures += not valid
                rec["k_hat"] = sel.k_hat
                rec["penalty_valid"] = valid
                rec["model_fits"] = tuple(
                    {
                        "k": fit.k,
                        "f_hat": fit.f_hat,
                        "f_hat_prime": fit.f_hat_prime,
                        "f_bar": fit.f_bar,
                        "excess": fit.excess,
                        "excess_prime": fit.excess_prime,
                        "emp_excess": fit.emp_excess,
                        "emp_excess_prime": fit.emp_excess_prime,
                        "split_gap": pens.split_gap[fit.k],
                        "alpha": _json_float(pens.alpha[fit.k]),
                        "gamma": _json_float(pens.gamma[fit.k]),
                        "penalty": _json_float(pens.total[fit.k]),
                        "objective": _json_float(sel.objective[fit.k]),
                    }
                    for fit in fits
                )
                if "split" in self.suites:
                    ok_all = all(split_event_check(fits, pens, self.family.eps))
                    events["split"] = bool(not ok_all)
                    violations["split"] += not ok_all
                if "oracle" in self.suites:
                    holds, lhs, rhs = oracle_inequality_check(
                        self.P, self.family, fits, pens, sel.k_hat
                    )
                    events["oracle"] = bool(not holds)
                    violations["oracle"] += not holds
                    rec["oracle_lhs"] = lhs
                    rec["oracle_rhs"] = _json_float(rhs)

            records.append(
                TrialRecord(
                    index=rec["index"],
                    z=rec.get("z"),
                    ratio=rec.get("ratio"),
                    erm_index=rec.get("erm_index"),
                    erm_excess=rec.get("erm_excess"),
                    events=events,
                    model_fits=rec.get("model_fits"),
                    k_hat=rec.get("k_hat"),
                    oracle_lhs=rec.get("oracle_lhs"),
                    oracle_rhs=rec.get("oracle_rhs"),
                    penalty_valid=rec.get("penalty_valid"),
                )
            )
        return ChunkResult(
            records=records,
            violations=violations,
            validity_failures=validity_failures,
            ratio_series=ratio_series,
            erm_series=erm_series,
        )


def _json_float(x: float):
    return None if math.isinf(x) or math.isnan(x) else float(x)


@dataclass
class ChunkResult:
    records: list
    violations: dict
    validity_failures: int
    ratio_series: np.ndarray
    erm_series: np.ndarray


def _run_chunk(args) -> ChunkResult:
    engine, start, stop = args
    return engine.run(range(start, stop))


@dataclass(frozen=True)
class CoverageReport:
    """One suite's empirical violation frequency against its clipped bound."""

    suite: str
    violations: int
    trials: int
    frequency: float
    bound: float
    bound_raw: float
    vacuous: bool
    std_error: float
    passed: bool
    extra: dict

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "violations": self.violations,
            "trials": self.trials,
            "frequency": self.frequency,
            "bound": self.bound,
            "bound_raw": _json_float(self.bound_raw),
            "vacuous": self.vacuous,
            "std_error": self.std_error,
            "passed": self.passed,
            **{k: v for k, v in sorted(self.extra.items())},
        }


def _coverage(suite, violations, trials, bound_raw, vacuous_extra=False, extra=None) -> CoverageReport:
    freq = violations / trials
    se = math.sqrt(freq * (1.0 - freq) / trials)
    vacuous = bound_raw > 1.0 or vacuous_extra
    bound = min(1.0, max(0.0, bound_raw)) if math.isfinite(bound_raw) else (
        1.0 if bound_raw > 0 else 0.0
    )
    passed = vacuous or freq <= bound + 3.0 * se
    return CoverageReport(
        suite=suite,
        violations=int(violations),
        trials=int(trials),
        frequency=freq,
        bound=bound,
        bound_raw=bound_raw,
        vacuous=bool(vacuous),
        std_error=se,
        passed=bool(passed),
        extra=extra or {},
    )


@dataclass
class RunResult:
    config: ExperimentConfig
    bundle: ExperimentBundle
    pipeline: BoundPipeline
    convex: ConvexDiagnostics | None
    selection: SelectionPipeline | None
    coverage: dict
    records: list
    series: dict
    ratio_delta: float
    z_sigma: np.ndarray | None = None  # sigma levels of the per-trial z records


def smallest_nonzero_excess(P: DiscreteDistribution, F: FunctionClass) -> float:
    fbar = risk_minimizer(P, F)
    e = (F.values - F.values[fbar]) @ P.weights
    positive = e[e > 1e-12]
    return float(np.min(positive)) if positive.size else 1.0


def build_engine(config: ExperimentConfig, bundle: ExperimentBundle,
                 pipeline: BoundPipeline, selection: SelectionPipeline | None) -> TrialEngine:
    P, F, params = bundle.distribution, bundle.function_class, bundle.params
    sim = config.simulation
    g = F.values - F.values[risk_minimizer(P, F)]
    e = g @ P.weights
    second = (g * g) @ P.weights
    s = np.sqrt(np.maximum(second - e * e, 0.0))
    band = np.flatnonzero(np.max(np.abs(g), axis=1) <= 1.0 + 1e-12)
    z_order = band[np.argsort(s[band], kind="stable")]
    sigma_grid = sim.sigma_grid.build()
    z_sigma = sigma_grid[thin_indices(sigma_grid.size, sim.trial_z_points)]
    z_pos = np.searchsorted(s[z_order], z_sigma, side="right") - 1

    ratio_delta = sim.ratio_delta
    if ratio_delta is None:
        ratio_delta = smallest_nonzero_excess(P, F)
    # an infinite conjugate makes the normalized statistic vanish identically;
    # the coverage row still reports the vacuous pipeline honestly
    h_val = pipeline.risk_bound.conjugate_at_inv_eps
    denom = params.eps * (h_val + e) + 2.0 * params.t / (params.q * params.n)

    delta_grid = sim.delta_grid.build()
    series_delta = delta_grid[thin_indices(delta_grid.size, sim.series_points)]

    bound_value = pipeline.risk_bound.value

    return TrialEngine(
        P=P,
        F=F,
        params=params,
        suites=tuple(config.suites),
        master_seed=sim.master_seed,
        cum_weights=np.cumsum(P.weights),
        centered=g,
        excess=e,
        band=band,
        z_sigma=z_sigma,
        z_order=z_order,
        z_pos=z_pos,
        ratio_delta=float(ratio_delta),
        ratio_denom=denom,
        series_delta=series_delta,
        excess_bound_value=bound_value,
        family=bundle.family,
        selection=selection,
    )


def run_suite(config: ExperimentConfig, workers: int = 1) -> RunResult:
    """Run every enabled suite and aggregate coverage deterministically.

    ``workers`` only chunks the trial range across processes; per-trial
    streams are keyed by trial index, so results are identical for any
    worker count.
    """
    bundle = build_bundle(config)
    P, F, params = bundle.distribution, bundle.function_class, bundle.params
    sim = config.simulation

    pipeline = build_bound_pipeline(
        P, F, params, sim.delta_grid.build(), sim.sigma_grid.build(),
        sim.reps, sim.master_seed,
    )

    convex = None
    if "convex" in config.suites:
        if F.kind != "parametric":
            raise ConfigError("the convex suite needs a parametric class", "suites")
        convex = convex_diagnostics(P, F, params.eta_n, pipeline.risk_bound.value)

    selection = None
    if any(s in config.suites for s in MODEL_SUITES):
        if bundle.family is None:
            raise ConfigError("the split and oracle suites need a models section", "suites")
        selection = build_selection_pipeline(P, bundle.family, params.n)

    engine = build_engine(config, bundle, pipeline, selection)

    trials = sim.trials
    workers = min(max(1, workers), trials)
    if workers <= 1:
        chunks = [engine.run(range(trials))]
    else:
        edges = np.linspace(0, trials, workers + 1).astype(int)
        args = [(engine, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_chunk, args))

    records = [r for c in chunks for r in c.records]
    violations = {s: sum(c.violations.get(s, 0) for c in chunks) for s in config.suites}
    validity_failures = sum(c.validity_failures for c in chunks)
    ratio_series = np.sum([c.ratio_series for c in chunks], axis=0)
    erm_series = np.sum([c.erm_series for c in chunks], axis=0)

    t, q = params.t, params.q
    coverage = {}
    series = {}
    bound_vacuous = pipeline.risk_bound.vacuous
    peel = np.array([min(1.0, max(0.0, tail_bound(d, t, q))) for d in engine.series_delta])

    for suite in config.suites:
        if suite == "ratio":
            raw = tail_bound(engine.ratio_delta, t, q)
            coverage[suite] = _coverage(
                suite, violations[suite], trials, raw,
                extra={
                    "delta": engine.ratio_delta,
                    "conjugate_at_inv_eps": _json_float(
                        pipeline.risk_bound.conjugate_at_inv_eps
                    ),
                },
            )
            series[suite] = {
                "delta": engine.series_delta.tolist(),
                "bound": peel.tolist(),
                "frequency": (ratio_series / trials).tolist(),
            }
        elif suite in ("erm", "convex"):
            value = pipeline.risk_bound.value
            raw = tail_bound(value, t, q) if math.isfinite(value) else -math.inf
            extra = {"excess_bound": _json_float(value)}
            vac = bound_vacuous
            if suite == "convex":
                extra.update(
                    {
                        "deviation_check_ok": convex.deviation_check.ok,
                        "margin_check_ok": convex.margin_check.ok,
                        "critical_radius": _json_float(convex.critical_radius),
                        "eta_n": convex.eta_n,
                        "contraction_ok": convex.contraction_ok,
                        "preconditions_ok": convex.ok,
                    }
                )
            coverage[suite] = _coverage(
                suite, violations[suite], trials, raw, vacuous_extra=vac, extra=extra
            )
            series[suite] = {
                "delta": engine.series_delta.tolist(),
                "bound": peel.tolist(),
                "frequency": (erm_series / trials).tolist(),
            }
        elif suite == "split":
            raw = sum(math.exp(-t_k) for t_k in bundle.family.t_schedule)
            coverage[suite] = _coverage(
                suite, violations[suite], trials, raw,
                vacuous_extra=_selection_vacuous(selection, bundle.family, params.n),
                extra={"t_schedule": list(bundle.family.t_schedule)},
            )
        elif suite == "oracle":
            base = sum(math.exp(-t_k) for t_k in bundle.family.t_schedule)
            vfreq = validity_failures / trials
            coverage[suite] = _coverage(
                suite, violations[suite], trials, base + vfreq,
                vacuous_extra=_selection_vacuous(selection, bundle.family, params.n),
                extra={
                    "t_schedule": list(bundle.family.t_schedule),
                    "union_tail": base,
                    "validity_failure_frequency": vfreq,
                },
            )

    return RunResult(
        config=config,
        bundle=bundle,
        pipeline=pipeline,
        convex=convex,
        selection=selection,
        coverage=coverage,
        records=records,
        series=series,
        ratio_delta=engine.ratio_delta,
        z_sigma=engine.z_sigma,
    )


def _selection_vacuous(selection: SelectionPipeline, family: ModelFamily, n: int) -> bool:
    """True when any penalty component is infinite for the family's levels."""
    eps = family.eps
    for k, t_k in enumerate(family.t_schedule):
        if math.isinf(centering_allowance(selection.umbrella_conjugate, t_k, n, eps)):
            return True
        if math.isinf(split_allowance(selection.model_conjugates[k], t_k, n, eps)):
            return True
    return False
