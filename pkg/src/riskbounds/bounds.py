"""Tail thresholds, the excess-risk bound, and the convex-parameter checks.

The bound value combines the conjugate of the inverted majorant with a
peeling term; its tail probability is reported clipped to [0, 1] together
with a vacuous flag, so uninformative parameter choices stay visible
instead of silently passing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import (
    DiscreteDistribution,
    EmpiricalMeasure,
    FunctionClass,
    ParameterNorm,
    risk_minimizer,
)
from .tabulated import TabulatedFunction


@dataclass(frozen=True)
class BoundParams:
    """Scalar knobs shared by the bound pipeline.

    ``eps_bar`` is the slack in the concentration threshold (default 3/5);
    ``eps`` must stay below 1/q so the peeling geometry closes; ``eta_n``
    only matters for parametric classes.
    """

    t: float
    q: float
    eps: float
    n: int
    eps_bar: float = 0.6
    eta_n: float = 1.0

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("t must be positive")
        if not self.q > 1:
            raise ValueError("q must exceed 1")
        if not 0 < self.eps < 1.0 / self.q:
            raise ValueError("eps must lie in (0, 1/q)")
        if not self.eps_bar > 0:
            raise ValueError("eps_bar must be positive")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not self.eta_n > 0:
            raise ValueError("eta_n must be positive")


def bousquet_threshold(EZ_sigma: float, sigma: float, params: BoundParams) -> float:
    """Concentration threshold for the empirical-process supremum at scale sigma.

    The supremum exceeds this level with probability at most exp(-t).
    """
    if EZ_sigma < 0 or sigma < 0:
        raise ValueError("expected supremum and sigma must be nonnegative")
    eb = params.eps_bar
    return (
        (1.0 + eb) * EZ_sigma
        + sigma * math.sqrt(2.0 * params.t / params.n)
        + (1.0 / 3.0 + 1.0 / eb) * params.t / params.n
    )


def bernstein_threshold(sigma: float, t: float, n: int, two_sided_factor: int = 1) -> float:
    """Bernstein deviation level sigma*sqrt(2t/n) + t/n for unit-bounded terms.

    ``two_sided_factor`` records how many one-sided applications the caller
    union-bounds at this level (1 or 2); the threshold itself is identical.
    """
    if sigma < 0 or t < 0:
        raise ValueError("sigma and t must be nonnegative")
    if two_sided_factor not in (1, 2):
        raise ValueError("two_sided_factor must be 1 or 2")
    return sigma * math.sqrt(2.0 * t / n) + t / n


def tail_bound(delta: float, t: float, q: float) -> float:
    """Unclipped peeling tail mass log_q(q/delta) * exp(-t)."""
    if delta <= 0:
        return math.inf
    if math.isinf(delta):
        return -math.inf
    return math.log(q / delta) / math.log(q) * math.exp(-t)


@dataclass(frozen=True)
class ExcessRiskBound:
    """The distribution-dependent excess-risk level and its tail probability.

    Inputs are echoed so a report row is reproducible on its own.  ``value``
    is +inf when the conjugate is infinite at 1/eps; ``tail_prob`` is the
    clipped peeling bound and ``vacuous`` marks clipping or an infinite
    level.
    """

    value: float
    tail_prob: float
    vacuous: bool
    t: float
    q: float
    eps: float
    n: int
    conjugate_at_inv_eps: float

    def to_dict(self) -> dict:
        return {
            "value": None if math.isinf(self.value) else self.value,
            "tail_prob": self.tail_prob,
            "vacuous": self.vacuous,
            "t": self.t,
            "q": self.q,
            "eps": self.eps,
            "n": self.n,
            "conjugate_at_inv_eps": (
                None if math.isinf(self.conjugate_at_inv_eps) else self.conjugate_at_inv_eps
            ),
        }


def excess_risk_bound(H: TabulatedFunction, params: BoundParams) -> ExcessRiskBound:
    """Excess-risk level q*eps/(1-q*eps) * H(1/eps) + 2t/((1-q*eps)*n).

    The empirical risk minimizer exceeds this level with probability at most
    the (clipped) peeling tail mass.
    """
    qe = params.q * params.eps
    if qe >= 1.0:
        raise ValueError("peeling constraint violated")
    h_val = float(H(1.0 / params.eps))
    if math.isinf(h_val):
        return ExcessRiskBound(
            value=math.inf,
            tail_prob=0.0,
            vacuous=True,
            t=params.t,
            q=params.q,
            eps=params.eps,
            n=params.n,
            conjugate_at_inv_eps=h_val,
        )
    value = qe / (1.0 - qe) * h_val + 2.0 * params.t / ((1.0 - qe) * params.n)
    raw = tail_bound(value, params.t, params.q)
    return ExcessRiskBound(
        value=value,
        tail_prob=min(1.0, max(0.0, raw)),
        vacuous=raw > 1.0,
        t=params.t,
        q=params.q,
        eps=params.eps,
        n=params.n,
        conjugate_at_inv_eps=h_val,
    )


def ratio_statistic(
    P: DiscreteDistribution,
    F: FunctionClass,
    Pn: EmpiricalMeasure,
    params: BoundParams,
    H_val: float,
    delta: float,
) -> float:
    """Largest normalized centered deviation over members with excess > delta.

    Each member's centered empirical deviation is divided by
    eps*(H_val + excess) + 2t/(q*n); members outside the unit deviation band
    or with excess at most delta are excluded, and an empty field yields 0.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    ratios = member_deviation_ratios(P, F, Pn, params, H_val)
    fbar = risk_minimizer(P, F)
    g = F.values - F.values[fbar]
    e = g @ P.weights
    b = np.max(np.abs(g), axis=1)
    eligible = (e > delta) & (b <= 1.0 + 1e-12)
    if not np.any(eligible):
        return 0.0
    return float(np.max(ratios[eligible]))


def member_deviation_ratios(
    P: DiscreteDistribution,
    F: FunctionClass,
    Pn: EmpiricalMeasure,
    params: BoundParams,
    H_val: float,
) -> np.ndarray:
    """Per-member |(Pn-P)(f-fbar)| / (eps*(H_val+excess) + 2t/(q*n))."""
    fbar = risk_minimizer(P, F)
    g = F.values - F.values[fbar]
    e = g @ P.weights
    dev = np.abs(g @ Pn.counts / Pn.n - e)
    denom = params.eps * (H_val + e) + 2.0 * params.t / (params.q * params.n)
    return dev / denom


@dataclass(frozen=True)
class ConditionCheck:
    """Outcome of a pointwise condition scan over a parametric class."""

    ok: bool
    worst_member: int
    worst_state: int | None
    worst_gap: float  # largest lhs - rhs over the scan; <= 0 when ok


def _require_parametric(F: FunctionClass):
    if F.kind != "parametric" or F.params is None or F.norm is None:
        raise ValueError("parametric class with a norm required")


def check_deviation_norm_bound(
    P: DiscreteDistribution, F: FunctionClass, eta_n: float
) -> ConditionCheck:
    """Scan eta_n*|loss deviation| <= max(norm distance, eta_n) over grid x states."""
    _require_parametric(F)
    if eta_n <= 0:
        raise ValueError("eta_n must be positive")
    ref = risk_minimizer(P, F)
    dev = np.abs(F.values - F.values[ref])  # members x states
    tau = np.array([F.norm(p - F.params[ref]) for p in F.params])
    rhs = np.maximum(tau, eta_n)
    gap = eta_n * dev - rhs[:, None]
    j = int(np.argmax(gap))
    worst_member, worst_state = divmod(j, dev.shape[1])
    worst = float(gap[worst_member, worst_state])
    return ConditionCheck(worst <= 1e-9, worst_member, worst_state, worst)


def check_norm_margin_bound(
    P: DiscreteDistribution, F: FunctionClass, radius_fn: TabulatedFunction
) -> ConditionCheck:
    """Scan radius_fn(excess) >= norm distance over the unit-deviation band."""
    _require_parametric(F)
    ref = risk_minimizer(P, F)
    dev = np.max(np.abs(F.values - F.values[ref]), axis=1)
    in_band = dev <= 1.0 + 1e-12
    e = np.maximum((F.values - F.values[ref]) @ P.weights, 0.0)
    tau = np.array([F.norm(p - F.params[ref]) for p in F.params])
    gap = np.where(in_band, tau - radius_fn(e), -np.inf)
    worst_member = int(np.argmax(gap))
    worst = float(gap[worst_member])
    return ConditionCheck(worst <= 1e-9, worst_member, None, worst)


def norm_radius(P: DiscreteDistribution, F: FunctionClass, pad: float = 0.0) -> TabulatedFunction:
    """Smallest increasing map from excess level to covered norm distance.

    Built as the running maximum of norm distance in order of excess risk
    over the unit-deviation band, so the norm-margin check holds for it by
    construction.  ``pad`` extends the right end of the excess grid.
    """
    _require_parametric(F)
    ref = risk_minimizer(P, F)
    dev = np.max(np.abs(F.values - F.values[ref]), axis=1)
    in_band = dev <= 1.0 + 1e-12
    e = np.maximum((F.values - F.values[ref]) @ P.weights, 0.0)[in_band]
    tau = np.array([F.norm(p - F.params[ref]) for p in F.params])[in_band]
    order = np.argsort(e, kind="stable")
    e_sorted = e[order]
    tau_running = np.maximum.accumulate(tau[order])
    grid = np.unique(e_sorted)
    # running max at the last occurrence of each excess level
    idx = np.searchsorted(e_sorted, grid, side="right") - 1
    values = tau_running[idx]
    if grid[0] > 0.0:
        grid = np.concatenate([[0.0], grid])
        values = np.concatenate([[values[0]], values])
    if grid.size < 2 or pad > 0.0:
        tail = grid[-1] + max(pad, 1.0 if grid.size < 2 else 0.0)
        grid = np.concatenate([grid, [tail]])
        values = np.concatenate([values, [values[-1]]])
    return TabulatedFunction(grid, values, "clamp")


def critical_norm_radius(radius_fn: TabulatedFunction, excess_bound: float) -> float:
    """Norm radius at the excess-risk bound level (extrapolated per tag)."""
    return float(radius_fn(excess_bound))


def interpolate_parameters(
    theta_hat: float,
    theta_bar: float,
    radius: float,
    norm: ParameterNorm,
) -> tuple[float, float]:
    """Pull theta_hat toward theta_bar so the norm distance stays within 2*radius.

    Returns the interpolated parameter and the mixing weight
    2*radius / (2*radius + norm(theta_hat - theta_bar)).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    d = norm(theta_hat - theta_bar)
    alpha = 2.0 * radius / (2.0 * radius + d)
    theta_tilde = alpha * theta_hat + (1.0 - alpha) * theta_bar
    return theta_tilde, alpha
