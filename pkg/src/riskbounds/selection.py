"""Multi-model ERM, the data-split penalty, and the selection checks.

A model family is a list of subclasses of one umbrella class.  Each trial
fits every model on two independent samples; the penalty for a model is the
cross-sample gap of its two minimizers plus two conjugate tail allowances.
The checks evaluate, per realization, the oracle inequality and the
split-penalty event whose probabilities the coverage suites measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import (
    DiscreteDistribution,
    EmpiricalMeasure,
    FunctionClass,
    empirical_mean,
    erm,
    mean,
    risk_minimizer,
)
from .tabulated import TabulatedFunction


@dataclass(frozen=True)
class ModelFamily:
    """Ordered models inside an umbrella class, with per-model tail levels."""

    models: tuple[FunctionClass, ...]
    umbrella: FunctionClass
    t_schedule: tuple[float, ...]
    eps: float
    member_indices: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.models) == 0:
            raise ValueError("family needs at least one model")
        if len(self.t_schedule) != len(self.models):
            raise ValueError("one tail level per model required")
        if any(t <= 0 for t in self.t_schedule):
            raise ValueError("tail levels must be positive")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        for model, idx in zip(self.models, self.member_indices):
            if model.size == 0:
                raise ValueError("empty model")
            if not np.array_equal(model.values, self.umbrella.values[list(idx)]):
                raise ValueError("model members must be rows of the umbrella class")

    @property
    def n_models(self) -> int:
        return len(self.models)

    @staticmethod
    def from_indices(
        umbrella: FunctionClass,
        index_lists,
        t_schedule,
        eps: float,
    ) -> "ModelFamily":
        models = tuple(umbrella.subset(idx) for idx in index_lists)
        return ModelFamily(
            models=models,
            umbrella=umbrella,
            t_schedule=tuple(float(t) for t in t_schedule),
            eps=eps,
            member_indices=tuple(tuple(int(i) for i in idx) for idx in index_lists),
        )


def default_t_schedule(t: float, n_models: int) -> tuple[float, ...]:
    """Union-bound budget: t + log(K) per model, so the levels sum to exp(-t)."""
    return tuple(t + math.log(n_models) for _ in range(n_models))


@dataclass(frozen=True)
class ModelFit:
    """Per-model minimizers and the four excess quantities of one trial."""

    k: int
    f_hat: int
    f_hat_prime: int
    f_bar: int
    excess: float          # true excess of the first-sample ERM within the model
    excess_prime: float    # same for the second-sample ERM
    emp_excess: float      # first-sample empirical gap of the true minimizer
    emp_excess_prime: float
    risk_hat: float        # first-sample empirical risk of the first-sample ERM


def fit_models(
    family: ModelFamily,
    Pn: EmpiricalMeasure,
    Pn_prime: EmpiricalMeasure,
    P: DiscreteDistribution,
) -> list[ModelFit]:
    """Fit every model on both samples and evaluate excesses exactly under P."""
    if Pn.n != Pn_prime.n:
        raise ValueError("both samples must have the same size")
    fits = []
    for k, model in enumerate(family.models):
        f_hat = erm(Pn, model)
        f_hat_prime = erm(Pn_prime, model)
        f_bar = risk_minimizer(P, model)
        fits.append(
            ModelFit(
                k=k,
                f_hat=f_hat,
                f_hat_prime=f_hat_prime,
                f_bar=f_bar,
                excess=mean(P, model.member(f_hat)) - mean(P, model.member(f_bar)),
                excess_prime=mean(P, model.member(f_hat_prime)) - mean(P, model.member(f_bar)),
                emp_excess=empirical_mean(Pn, model.member(f_bar))
                - empirical_mean(Pn, model.member(f_hat)),
                emp_excess_prime=empirical_mean(Pn_prime, model.member(f_bar))
                - empirical_mean(Pn_prime, model.member(f_hat_prime)),
                risk_hat=empirical_mean(Pn, model.member(f_hat)),
            )
        )
    return fits


def centering_allowance(phi_conj: TabulatedFunction, t_k: float, n: int, eps: float) -> float:
    """Tail allowance eps*conj(sqrt(t_k/(n*eps^2))) + t_k/n; +inf when vacuous."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    v = math.sqrt(t_k / (n * eps * eps))
    c = float(phi_conj(v))
    return math.inf if math.isinf(c) else eps * c + t_k / n


def split_allowance(model_conj: TabulatedFunction, t_k: float, n: int, eps: float) -> float:
    """Tail allowance eps*conj(sqrt(2*t_k/(n*eps^2))) + t_k/n; +inf when vacuous."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    v = math.sqrt(2.0 * t_k / (n * eps * eps))
    c = float(model_conj(v))
    return math.inf if math.isinf(c) else eps * c + t_k / n


def cross_sample_gap(
    Pn: EmpiricalMeasure,
    Pn_prime: EmpiricalMeasure,
    fit: ModelFit,
    model: FunctionClass,
) -> float:
    """Signed gap (Pn' - Pn) applied to the difference of the two ERMs."""
    d = model.values[fit.f_hat] - model.values[fit.f_hat_prime]
    return float(d @ Pn_prime.counts) / Pn_prime.n - float(d @ Pn.counts) / Pn.n


@dataclass(frozen=True)
class PenaltySchedule:
    """Per-model penalty components; ``total = split_gap + alpha + 2*gamma``."""

    alpha: tuple[float, ...]
    gamma: tuple[float, ...]
    split_gap: tuple[float, ...]
    total: tuple[float, ...]
    vacuous: tuple[bool, ...]

    def __post_init__(self):
        for a, g, b, p in zip(self.alpha, self.gamma, self.split_gap, self.total):
            if not (math.isinf(p) or p == b + a + 2.0 * g):
                raise ValueError("penalty must equal split_gap + alpha + 2*gamma")


def penalty_schedule(
    family: ModelFamily,
    fits: list[ModelFit],
    Pn: EmpiricalMeasure,
    Pn_prime: EmpiricalMeasure,
    umbrella_conj: TabulatedFunction,
    model_conjs: list[TabulatedFunction],
) -> PenaltySchedule:
    """Assemble the data-split penalty for every model of one trial."""
    alphas, gammas, gaps, totals, vac = [], [], [], [], []
    for k, (model, fit) in enumerate(zip(family.models, fits)):
        t_k = family.t_schedule[k]
        a = centering_allowance(umbrella_conj, t_k, Pn.n, family.eps)
        g = split_allowance(model_conjs[k], t_k, Pn.n, family.eps)
        b = cross_sample_gap(Pn, Pn_prime, fit, model)
        alphas.append(a)
        gammas.append(g)
        gaps.append(b)
        totals.append(b + a + 2.0 * g)
        vac.append(math.isinf(a) or math.isinf(g))
    return PenaltySchedule(
        alpha=tuple(alphas),
        gamma=tuple(gammas),
        split_gap=tuple(gaps),
        total=tuple(totals),
        vacuous=tuple(vac),
    )


@dataclass(frozen=True)
class SelectionResult:
    """Selected model index with per-model objectives and check outcomes."""

    k_hat: int
    objective: tuple[float, ...]
    oracle_lhs: float | None = None
    oracle_rhs: float | None = None
    oracle_holds: bool | None = None
    split_event_holds: bool | None = None


def select_model(
    fits: list[ModelFit],
    penalties: PenaltySchedule,
    Pn: EmpiricalMeasure,
) -> SelectionResult:
    """Pick the model minimizing empirical risk plus penalty (lowest index wins)."""
    if not fits:
        raise ValueError("empty family")
    objectives = tuple(fit.risk_hat + penalties.total[fit.k] for fit in fits)
    k_hat = int(np.argmin(objectives))
    return SelectionResult(k_hat=k_hat, objective=objectives)


def oracle_inequality_check(
    P: DiscreteDistribution,
    family: ModelFamily,
    fits: list[ModelFit],
    penalties: PenaltySchedule,
    k_hat: int,
) -> tuple[bool, float, float]:
    """Evaluate both sides of the oracle inequality for one realization.

    The left side is the overall excess risk of the selected model's ERM;
    the right side is the best model's overall excess plus penalty terms,
    inflated by 1/(1-eps)^2.  Returns (holds, lhs, rhs).
    """
    eps = family.eps
    f_star = risk_minimizer(P, family.umbrella)
    f_star_risk = mean(P, family.umbrella.member(f_star))
    fit = fits[k_hat]
    lhs = mean(P, family.models[k_hat].member(fit.f_hat)) - f_star_risk
    candidates = []
    for k, model in enumerate(family.models):
        bar_excess = mean(P, model.member(fits[k].f_bar)) - f_star_risk
        candidates.append(
            bar_excess + (1.0 - eps) * (penalties.alpha[k] + penalties.total[k])
        )
    rhs = min(candidates) / (1.0 - eps) ** 2
    return lhs <= rhs, lhs, rhs


def split_event_check(
    fits: list[ModelFit], penalties: PenaltySchedule, eps: float
) -> list[bool]:
    """Per-model event: split_gap + 2*gamma covers the four excess quantities."""
    out = []
    for fit in fits:
        lhs = penalties.split_gap[fit.k] + 2.0 * penalties.gamma[fit.k]
        rhs = (
            (1.0 - eps) * (fit.excess_prime + fit.excess)
            + fit.emp_excess_prime
            + fit.emp_excess
        )
        out.append(bool(lhs >= rhs))
    return out


def penalty_validity_event(
    fits: list[ModelFit], penalties: PenaltySchedule, eps: float
) -> bool:
    """True when every model's penalty covers its empirical and true excess."""
    for fit in fits:
        rhs = fit.emp_excess + (1.0 - eps) * fit.excess + penalties.alpha[fit.k]
        if penalties.total[fit.k] < rhs:
            return False
    return True
