"""Margin geometry: radius curves, envelopes, majorants and conjugates.

The margin behavior of a finite class is summarized two ways: the radius
curve (largest deviation-std among members whose excess risk stays below a
level) and the envelope (largest convex nondecreasing minorant of excess
risk as a function of deviation-std).  Conjugates turn those curves into
the additive constants used by the tail bounds; everything is tabulated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import DiscreteDistribution, FunctionClass, risk_minimizer
from .tabulated import TabulatedFunction

CONVEXITY_TOL = 1e-8
RAMP = 1e-9


def _hull_vertices(x: np.ndarray, y: np.ndarray, upper: bool) -> tuple[np.ndarray, np.ndarray]:
    """Monotone-chain hull of points with strictly increasing x."""
    vx: list[float] = []
    vy: list[float] = []
    for xi, yi in zip(x, y):
        while len(vx) >= 2:
            cross = (vy[-1] - vy[-2]) * (xi - vx[-1]) - (yi - vy[-1]) * (vx[-1] - vx[-2])
            keep = cross > 0 if upper else cross < 0
            if keep:
                break
            vx.pop()
            vy.pop()
        vx.append(float(xi))
        vy.append(float(yi))
    return np.asarray(vx), np.asarray(vy)


def upper_concave_hull(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return _hull_vertices(x, y, upper=True)


def lower_convex_hull(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return _hull_vertices(x, y, upper=False)


def _centered_stats(P: DiscreteDistribution, F: FunctionClass, ref: int):
    """Excess risk and deviation-std of every member relative to member ref."""
    g = F.values - F.values[ref]
    e = g @ P.weights
    second = (g * g) @ P.weights
    s = np.sqrt(np.maximum(second - e * e, 0.0))
    return np.maximum(e, 0.0), s


def margin_radius(
    P: DiscreteDistribution, F: FunctionClass, delta_grid
) -> TabulatedFunction:
    """Largest deviation-std among members with excess risk at most delta.

    Computed by brute force over the finite class for every grid level; the
    risk minimizer itself always qualifies, so the curve starts at zero and
    is nondecreasing.
    """
    delta_grid = np.asarray(delta_grid, dtype=float)
    if delta_grid.size < 2 or np.any(delta_grid <= 0) or np.any(np.diff(delta_grid) <= 0):
        raise ValueError("delta grid must be positive and strictly increasing")
    fbar = risk_minimizer(P, F)
    e, s = _centered_stats(P, F, fbar)
    order = np.argsort(e, kind="stable")
    e_sorted = e[order]
    s_running = np.maximum.accumulate(s[order])
    idx = np.searchsorted(e_sorted, delta_grid, side="right") - 1
    values = np.where(idx >= 0, s_running[np.clip(idx, 0, None)], 0.0)
    return TabulatedFunction(delta_grid, values, "clamp")


def margin_envelope(P: DiscreteDistribution, F: FunctionClass, ref: int | None = None) -> TabulatedFunction:
    """Greatest convex nondecreasing minorant of excess risk vs deviation-std.

    The scatter of (deviation-std, excess at the reference) over the class is
    reduced to its per-abscissa minimum and then to its lower convex hull
    through the origin.  The result touches the scatter somewhere, lies below
    it everywhere, and extends linearly past the last data point.
    """
    if F.size == 0:
        raise ValueError("empty class")
    if ref is None:
        ref = risk_minimizer(P, F)
    e, s = _centered_stats(P, F, ref)
    s_unique, inverse = np.unique(s, return_inverse=True)
    e_min = np.full(s_unique.shape, np.inf)
    np.minimum.at(e_min, inverse, e)
    if s_unique[0] > 0.0:
        s_unique = np.concatenate([[0.0], s_unique])
        e_min = np.concatenate([[0.0], e_min])
    else:
        e_min[0] = 0.0
    if s_unique.size < 2:
        # all members coincide with the reference; flat envelope
        return TabulatedFunction([0.0, 1.0], [0.0, 0.0], "linear")
    hx, hy = lower_convex_hull(s_unique, e_min)
    if hx.size < 2:
        return TabulatedFunction([0.0, 1.0], [0.0, 0.0], "linear")
    return TabulatedFunction(hx, hy, "linear")


def legendre_conjugate(G: TabulatedFunction, v_grid) -> TabulatedFunction:
    """Convex conjugate sup_u [u*v - G(u)] of a tabulated convex function.

    G must be tabulated on a nonnegative grid through the origin and be
    convex nondecreasing.  With a ``linear`` (or ``clamp``) tag, G continues
    past its grid with the last chord slope, so the conjugate is finite up
    to that slope and the result carries the ``infinite`` tag beyond.  With
    an ``infinite`` tag the supremum runs over the grid alone, the conjugate
    is finite everywhere and continues linearly.
    """
    u = G.grid
    g = G.values
    if abs(u[0]) > 1e-12 or abs(g[0]) > 1e-12:
        raise ValueError("conjugate requires a nonnegative grid with G(0)=0")
    if np.any(np.diff(g) < -1e-12):
        raise ValueError("conjugate requires a nondecreasing input")
    slopes = np.diff(g) / np.diff(u)
    if slopes.size > 1:
        drop = np.diff(slopes)
        tol = CONVEXITY_TOL * np.maximum(1.0, np.abs(slopes[:-1]))
        if np.any(drop < -tol):
            raise ValueError("conjugate requires convexity")
    v_grid = np.asarray(v_grid, dtype=float)
    if np.any(v_grid < 0):
        raise ValueError("conjugate grid must be nonnegative")
    if G.extrapolation == "infinite":
        pts = np.unique(np.concatenate([[0.0], v_grid]))
        h = np.max(pts[:, None] * u[None, :] - g[None, :], axis=1)
        return TabulatedFunction(pts, h, "linear")
    max_slope = float(slopes[-1]) if slopes.size else 0.0
    if max_slope <= 0.0:
        # flat input: the conjugate is +inf for every positive argument
        return TabulatedFunction([0.0, 1e-12], [0.0, 0.0], "infinite")
    # keep the boundary of the slope range despite roundoff in the slopes
    kept = v_grid[v_grid <= max_slope * (1.0 + 1e-7)]
    pts = np.unique(np.concatenate([[0.0], kept]))
    # close the grid at the slope-range boundary, but never with a segment so
    # short that value roundoff wrecks its chord slope
    if max_slope - pts[-1] > 1e-6 * max(1.0, max_slope):
        pts = np.append(pts, max_slope)
    h = np.max(pts[:, None] * u[None, :] - g[None, :], axis=1)
    return TabulatedFunction(pts, h, "infinite")


def invert_increasing(tab: TabulatedFunction) -> TabulatedFunction:
    """Inverse of a strictly increasing tabulation, anchored at the origin.

    The inverse maps values back to abscissae; a leading (0, 0) knot is added
    when the tabulation starts above zero, so the result qualifies as
    conjugate input.
    """
    if np.any(np.diff(tab.values) <= 0):
        raise ValueError("inversion requires strictly increasing values")
    grid = tab.values
    values = tab.grid
    if grid[0] > 0.0:
        grid = np.concatenate([[0.0], grid])
        values = np.concatenate([[0.0], values])
    elif grid[0] < 0.0:
        raise ValueError("inversion requires nonnegative values")
    return TabulatedFunction(grid, values, "linear")


def _flat_top_knots(W: TabulatedFunction) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the origin-anchored concave hull, flattened after its peak."""
    if np.any(W.values < 0):
        raise ValueError("majorant requires nonnegative values")
    if W.grid[0] <= 0:
        raise ValueError("majorant requires a positive grid")
    px = np.concatenate([[0.0], W.grid])
    py = np.concatenate([[0.0], W.values])
    hx, hy = upper_concave_hull(px, py)
    peak = int(np.argmax(hy))
    kx = list(hx[: peak + 1])
    ky = list(hy[: peak + 1])
    if kx[-1] < W.grid[-1]:
        kx.append(float(W.grid[-1]))
        ky.append(ky[-1])
    return np.asarray(kx), np.asarray(ky)


def increasing_concave_majorant(W: TabulatedFunction, ramp: float = RAMP) -> TabulatedFunction:
    """Smallest origin-anchored concave hull above a tabulation, made strict.

    The hull is taken over the data points together with the origin, which
    simultaneously guarantees concavity on the grid and a nonincreasing
    value-to-abscissa ratio; any decreasing tail is flattened at the peak.
    A tiny linear ramp then makes the result strictly increasing (hence
    invertible) without affecting any downstream tolerance.
    """
    kx, ky = _flat_top_knots(W)
    hull_on_grid = np.interp(W.grid, kx, ky)
    hull_on_grid = np.maximum(hull_on_grid, W.values)  # guard interp roundoff
    psi = hull_on_grid + ramp * W.grid
    return TabulatedFunction(W.grid, psi, "clamp")


def majorant_knots(W: TabulatedFunction, ramp: float = RAMP) -> TabulatedFunction:
    """Knot form of the increasing concave majorant (same function).

    The dense-grid tabulation suffers float cancellation in near-flat
    regions once inverted; the knot form keeps one clean segment per hull
    edge, so its inverse passes the conjugate's convexity check.
    """
    kx, ky = _flat_top_knots(W)
    return TabulatedFunction(kx, ky + ramp * kx, "clamp")


def deviation_budget(EZ: TabulatedFunction, t: float, n: int) -> TabulatedFunction:
    """Process-plus-variance deviation budget (8/5)*EZ(s) + s*sqrt(2t/n)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if n < 1:
        raise ValueError("n must be at least 1")
    if np.any(EZ.values < 0):
        raise ValueError("expected suprema must be nonnegative")
    values = 1.6 * EZ.values + EZ.grid * np.sqrt(2.0 * t / n)
    return TabulatedFunction(EZ.grid, values, EZ.extrapolation)


def compose_on_grid(outer: TabulatedFunction, inner: TabulatedFunction) -> TabulatedFunction:
    """Tabulate outer(inner(x)) on inner's grid."""
    return TabulatedFunction(inner.grid, outer(inner.values), "clamp")


def _require_nondecreasing(values: np.ndarray, what: str, tol: float = 1e-12):
    if np.any(np.diff(values) < -tol):
        raise ValueError(f"{what} must be nondecreasing")


def _require_convex(tab: TabulatedFunction, what: str):
    slopes = np.diff(tab.values) / np.diff(tab.grid)
    if slopes.size > 1:
        tol = CONVEXITY_TOL * np.maximum(1.0, np.abs(slopes[:-1]))
        if np.any(np.diff(slopes) < -tol):
            raise ValueError(f"{what} must be convex")


@dataclass(frozen=True)
class MarginProfile:
    """Radius curve, envelope and envelope conjugate of one class."""

    margin_radius: TabulatedFunction
    envelope: TabulatedFunction
    conjugate: TabulatedFunction

    def __post_init__(self):
        _require_nondecreasing(self.margin_radius.values, "margin radius")
        _require_nondecreasing(self.envelope.values, "envelope")
        _require_convex(self.envelope, "envelope")
        if abs(self.envelope(0.0)) > 1e-9:
            raise ValueError("envelope must vanish at zero")
        _require_convex(self.conjugate, "conjugate")
        if abs(self.conjugate(0.0)) > 1e-9:
            raise ValueError("conjugate must vanish at zero")


def margin_profile(
    P: DiscreteDistribution,
    F: FunctionClass,
    delta_grid,
    v_grid,
    ref: int | None = None,
) -> MarginProfile:
    envelope = margin_envelope(P, F, ref=ref)
    return MarginProfile(
        margin_radius=margin_radius(P, F, delta_grid),
        envelope=envelope,
        conjugate=legendre_conjugate(envelope, v_grid),
    )
