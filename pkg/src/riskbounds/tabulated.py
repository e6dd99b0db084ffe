"""Piecewise-linear tabulated functions with declared extrapolation.

All functional objects in the bound pipeline (margin radius, envelopes,
concave majorants, conjugates) are tabulations on explicit grids.  Inside
the grid, evaluation is linear interpolation; outside, behavior is set by
the extrapolation tag:

* ``clamp``    - hold the endpoint value,
* ``linear``   - extend the first/last segment slope,
* ``infinite`` - clamp on the left, ``+inf`` beyond the right endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EXTRAPOLATION_TAGS = ("clamp", "linear", "infinite")


@dataclass(frozen=True)
class TabulatedFunction:
    grid: np.ndarray
    values: np.ndarray
    extrapolation: str = "clamp"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid must hold at least two abscissae")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if values.shape != grid.shape:
            raise ValueError("one value per grid point required")
        if not np.all(np.isfinite(values)):
            raise ValueError("tabulated values must be finite")
        if self.extrapolation not in EXTRAPOLATION_TAGS:
            raise ValueError(f"unknown extrapolation tag: {self.extrapolation!r}")

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        scalar = xs.ndim == 0
        xs = np.atleast_1d(xs)
        out = np.interp(xs, self.grid, self.values)
        below = xs < self.grid[0]
        above = xs > self.grid[-1]
        if self.extrapolation == "linear":
            if np.any(below):
                s0 = (self.values[1] - self.values[0]) / (self.grid[1] - self.grid[0])
                out[below] = self.values[0] + s0 * (xs[below] - self.grid[0])
            if np.any(above):
                s1 = (self.values[-1] - self.values[-2]) / (self.grid[-1] - self.grid[-2])
                out[above] = self.values[-1] + s1 * (xs[above] - self.grid[-1])
        elif self.extrapolation == "infinite":
            out[above] = np.inf
        # clamp: np.interp already holds endpoint values
        return float(out[0]) if scalar else out

    def is_finite_at(self, x: float) -> bool:
        return not (self.extrapolation == "infinite" and float(x) > self.grid[-1])

    @property
    def max_slope(self) -> float:
        return float(np.max(np.diff(self.values) / np.diff(self.grid)))

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "extrapolation": self.extrapolation,
        }

    @staticmethod
    def from_dict(d: dict) -> "TabulatedFunction":
        return TabulatedFunction(
            np.asarray(d["grid"], dtype=float),
            np.asarray(d["values"], dtype=float),
            d.get("extrapolation", "clamp"),
        )
