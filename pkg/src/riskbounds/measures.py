"""Exact and empirical functionals on finite sample spaces.

Everything here is built around a known discrete distribution, so risks,
variances and excess risks are computed by direct summation rather than
estimated.  Function classes are finite tables (one row of loss values per
member), which keeps empirical risk minimization an exhaustive argmin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteDistribution:
    """A probability distribution on a finite set of abstract states."""

    states: tuple
    weights: np.ndarray

    def __post_init__(self):
        states = tuple(self.states)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)
        if len(states) == 0:
            raise ValueError("distribution needs at least one state")
        if len(set(states)) != len(states):
            raise ValueError("states must be distinct")
        if weights.shape != (len(states),):
            raise ValueError("one weight per state required")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > WEIGHT_TOL:
            raise ValueError("weights must sum to 1")

    @property
    def n_states(self) -> int:
        return len(self.states)

    def state_index(self, state) -> int:
        return self.states.index(state)


@dataclass(frozen=True)
class LossFunction:
    """A real-valued loss table, one value per state of the ambient space."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("loss values must be a nonempty 1-d array")
        if not np.all(np.isfinite(values)):
            raise ValueError("loss values must be finite")


@dataclass(frozen=True)
class ParameterNorm:
    """Scaled absolute-value norm on a one-dimensional parameter space."""

    scale: float = 1.0

    def __call__(self, dtheta) -> float:
        return float(self.scale) * abs(float(dtheta))


@dataclass(frozen=True)
class FunctionClass:
    """A finite, ordered family of loss functions on a common state space.

    ``kind`` is ``"finite"`` for plain enumerable classes.  Parametric
    classes (``kind == "parametric"``) are materialized on a 1-d parameter
    grid; each grid point owns one row of ``values`` and the class carries
    the norm used to measure parameter distances.  Convexity of the loss in
    the parameter is checked state by state via the chord test on the grid.
    """

    values: np.ndarray
    kind: str = "finite"
    params: np.ndarray | None = None
    norm: ParameterNorm | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[0] == 0:
            raise ValueError("class must be a nonempty (members x states) table")
        if not np.all(np.isfinite(values)):
            raise ValueError("loss values must be finite")
        if self.kind not in ("finite", "parametric"):
            raise ValueError(f"unknown class kind: {self.kind!r}")
        if self.kind == "parametric":
            params = np.asarray(self.params, dtype=float)
            object.__setattr__(self, "params", params)
            if params.shape != (values.shape[0],):
                raise ValueError("one parameter per member required")
            if np.any(np.diff(params) <= 0):
                raise ValueError("parameter grid must be strictly increasing")
            if self.norm is None:
                object.__setattr__(self, "norm", ParameterNorm(1.0))
            _check_convex_in_parameter(params, values)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def n_states(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.size

    def member(self, i: int) -> LossFunction:
        return LossFunction(self.values[i])

    def subset(self, indices: Sequence[int]) -> "FunctionClass":
        """Finite subclass sharing this class's loss rows (by value)."""
        idx = np.asarray(indices, dtype=int)
        return FunctionClass(self.values[idx], kind="finite")

    @staticmethod
    def finite(members: Sequence) -> "FunctionClass":
        rows = [np.asarray(getattr(m, "values", m), dtype=float) for m in members]
        return FunctionClass(np.vstack(rows), kind="finite")

    @staticmethod
    def parametric(params, values, norm: ParameterNorm | None = None) -> "FunctionClass":
        return FunctionClass(
            np.asarray(values, dtype=float),
            kind="parametric",
            params=np.asarray(params, dtype=float),
            norm=norm or ParameterNorm(1.0),
        )


def _check_convex_in_parameter(params: np.ndarray, values: np.ndarray, tol: float = 1e-9):
    # chord-slope test per state; handles uneven grids
    if len(params) < 3:
        return
    dp = np.diff(params)
    slopes = np.diff(values, axis=0) / dp[:, None]
    if np.any(np.diff(slopes, axis=0) < -tol):
        raise ValueError("parametric loss must be convex along the parameter grid")


@dataclass(frozen=True)
class Sample:
    """Indices of i.i.d. draws plus the id of the RNG stream that made them."""

    draws: np.ndarray
    seed_provenance: int = 0

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=np.int64)
        object.__setattr__(self, "draws", draws)
        if draws.ndim != 1 or draws.size == 0:
            raise ValueError("sample must contain at least one draw")
        if np.any(draws < 0):
            raise ValueError("draws must be valid state indices")

    @property
    def n(self) -> int:
        return self.draws.size


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Per-state counts of a sample of size n."""

    counts: np.ndarray
    n: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if int(counts.sum()) != self.n:
            raise ValueError("counts must sum to n")

    @staticmethod
    def from_sample(sample: Sample, n_states: int) -> "EmpiricalMeasure":
        if np.any(sample.draws >= n_states):
            raise ValueError("draws must be valid state indices")
        counts = np.bincount(sample.draws, minlength=n_states)
        return EmpiricalMeasure(counts, sample.n)


def _check_states(n_states: int, f: LossFunction):
    if f.values.size != n_states:
        raise ValueError("state-space mismatch")


def mean(P: DiscreteDistribution, f: LossFunction) -> float:
    """Expected loss of f under P, by direct summation."""
    _check_states(P.n_states, f)
    return float(P.weights @ f.values)


def empirical_mean(Pn: EmpiricalMeasure, f: LossFunction) -> float:
    """Sample-average loss of f under the empirical measure."""
    if Pn.n == 0:
        raise ValueError("empty sample")
    if f.values.size != Pn.counts.size:
        raise ValueError("state-space mismatch")
    return float(Pn.counts @ f.values) / Pn.n


def variance(P: DiscreteDistribution, f: LossFunction) -> float:
    """Variance of f(X) under P; clipped at zero against roundoff."""
    _check_states(P.n_states, f)
    m = float(P.weights @ f.values)
    m2 = float(P.weights @ (f.values * f.values))
    return max(m2 - m * m, 0.0)


def std_dev(P: DiscreteDistribution, f: LossFunction) -> float:
    return variance(P, f) ** 0.5


def _row_risks(P: DiscreteDistribution, F: FunctionClass) -> np.ndarray:
    # one dot per row, bit-identical to mean() so the minimizer's excess is
    # exactly zero (a matrix-vector product can round differently)
    return np.array([float(P.weights @ row) for row in F.values])


def risk_minimizer(P: DiscreteDistribution, F: FunctionClass) -> int:
    """Index of the exact risk minimizer in F under P (lowest index on ties)."""
    if F.size == 0:
        raise ValueError("empty class")
    _check_states(P.n_states, F.member(0))
    return int(np.argmin(_row_risks(P, F)))


def excess_risk(P: DiscreteDistribution, F: FunctionClass, f: LossFunction) -> float:
    """Gap between the risk of f and the best risk attained in F."""
    if F.size == 0:
        raise ValueError("empty class")
    best = float(np.min(_row_risks(P, F)))
    return mean(P, f) - best


def erm(Pn: EmpiricalMeasure, F: FunctionClass) -> int:
    """Index of the empirical risk minimizer (lowest index on ties)."""
    if F.size == 0:
        raise ValueError("empty class")
    if F.n_states != Pn.counts.size:
        raise ValueError("state-space mismatch")
    if Pn.n == 0:
        raise ValueError("empty sample")
    # per-row dots, bit-consistent with empirical_mean so the fitted
    # empirical excess can never round negative
    emp = np.array([float(Pn.counts @ row) for row in F.values])
    return int(np.argmin(emp))


def sup_norm_dev(f: LossFunction, g: LossFunction) -> float:
    """Largest pointwise absolute difference between two loss tables."""
    if f.values.size != g.values.size:
        raise ValueError("state-space mismatch")
    return float(np.max(np.abs(f.values - g.values)))


@dataclass(frozen=True)
class RescaledClass:
    function_class: FunctionClass
    scale: float  # divisor applied to every member; 1.0 means unchanged


def rescale_to_unit(F: FunctionClass, P: DiscreteDistribution) -> RescaledClass:
    """Divide every member by the largest sup-deviation from the risk minimizer.

    After rescaling, ``max_f sup_x |f(x) - fbar(x)| <= 1``.  Classes already
    within the unit band (or with zero spread) are returned unchanged with
    scale 1 so downstream bounds need no adjustment.
    """
    fbar = risk_minimizer(P, F)
    devs = np.max(np.abs(F.values - F.values[fbar]), axis=1)
    m = float(np.max(devs))
    if m <= 1.0:
        return RescaledClass(F, 1.0)
    scaled = FunctionClass(
        F.values / m,
        kind=F.kind,
        params=F.params,
        norm=F.norm,
    )
    return RescaledClass(scaled, m)
