"""Experiment configuration: JSON schema, defaults, parsing and emission.

A config document either names a built-in fixture or spells out the
distribution, class, and models inline.  Parsing is strict and errors carry
the offending field path (or line for syntax errors).  Emission of a parsed
config reproduces an equivalent document: ``parse(emit(cfg)) == cfg``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

SUITE_NAMES = ("ratio", "erm", "convex", "split", "oracle")

DEFAULT_DELTA_GRID = {"kind": "geometric", "lo": 1e-4, "hi": 1.0, "points": 256}
DEFAULT_SIGMA_GRID = {"kind": "geometric", "lo": 1e-4, "hi": 1.0, "points": 256}


class ConfigError(ValueError):
    """A config problem addressed by field path (and line when syntactic)."""

    def __init__(self, message: str, path: str = "", line: int | None = None):
        self.path = path
        self.line = line
        where = path or (f"line {line}" if line is not None else "document")
        super().__init__(f"{where}: {message}")


def _expect(cond: bool, message: str, path: str):
    if not cond:
        raise ConfigError(message, path)


def _get(d: dict, key: str, path: str, required: bool = False, default=None):
    if key not in d:
        _expect(not required, "missing field", f"{path}.{key}" if path else key)
        return default
    return d[key]


def _as_float(v, path: str) -> float:
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool), "expected a number", path)
    out = float(v)
    _expect(math.isfinite(out), "expected a finite number", path)
    return out


def _as_int(v, path: str) -> int:
    _expect(isinstance(v, int) and not isinstance(v, bool), "expected an integer", path)
    return int(v)


def _as_number_list(v, path: str) -> tuple[float, ...]:
    _expect(isinstance(v, list) and len(v) > 0, "expected a nonempty array", path)
    return tuple(_as_float(x, f"{path}[{i}]") for i, x in enumerate(v))


@dataclass(frozen=True)
class GridSpec:
    kind: str = "geometric"
    lo: float = 1e-4
    hi: float = 1.0
    points: int = 256

    def __post_init__(self):
        if self.kind not in ("geometric", "linear"):
            raise ConfigError("grid kind must be 'geometric' or 'linear'", "grid.kind")
        if self.points < 2:
            raise ConfigError("grid needs at least 2 points", "grid.points")
        if not self.lo < self.hi:
            raise ConfigError("grid lo must be below hi", "grid.lo")
        if self.kind == "geometric" and self.lo <= 0:
            raise ConfigError("geometric grid needs lo > 0", "grid.lo")

    def build(self) -> np.ndarray:
        if self.kind == "geometric":
            return np.geomspace(self.lo, self.hi, self.points)
        return np.linspace(self.lo, self.hi, self.points)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi, "points": self.points}

    @staticmethod
    def from_dict(d, path: str) -> "GridSpec":
        _expect(isinstance(d, dict), "expected an object", path)
        return GridSpec(
            kind=_get(d, "kind", path, default="geometric"),
            lo=_as_float(_get(d, "lo", path, default=1e-4), f"{path}.lo"),
            hi=_as_float(_get(d, "hi", path, default=1.0), f"{path}.hi"),
            points=_as_int(_get(d, "points", path, default=256), f"{path}.points"),
        )


@dataclass(frozen=True)
class DistributionSpec:
    states: tuple
    weights: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"states": list(self.states), "weights": list(self.weights)}


@dataclass(frozen=True)
class ClassSpec:
    """Inline class: either a member table or a parametric grid."""

    members: tuple[tuple[float, ...], ...] | None = None
    param_grid: tuple[float, ...] | None = None
    param_values: tuple[tuple[float, ...], ...] | None = None
    norm_kind: str = "abs"
    norm_scale: float = 1.0

    def to_dict(self) -> dict:
        if self.members is not None:
            return {"members": [list(m) for m in self.members]}
        return {
            "parametric": {
                "grid": list(self.param_grid),
                "values": [list(row) for row in self.param_values],
                "norm": {"kind": self.norm_kind, "scale": self.norm_scale},
            }
        }


@dataclass(frozen=True)
class ParamSpec:
    t: float = 2.0
    q: float = 2.0
    eps: float = 0.25
    eps_bar: float = 0.6
    eta_n: float = 1.0
    n: int = 200
    t_schedule: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "q": self.q,
            "eps": self.eps,
            "eps_bar": self.eps_bar,
            "eta_n": self.eta_n,
            "n": self.n,
            "t_schedule": None if self.t_schedule is None else list(self.t_schedule),
        }


@dataclass(frozen=True)
class SimulationSpec:
    trials: int = 10000
    reps: int = 10000
    master_seed: int = 20060415
    delta_grid: GridSpec = field(default_factory=GridSpec)
    sigma_grid: GridSpec = field(default_factory=GridSpec)
    ratio_delta: float | None = None  # None: smallest nonzero excess of the class
    series_points: int = 64
    trial_z_points: int = 17

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1", "simulation.trials")
        if self.reps < 1:
            raise ConfigError("reps must be at least 1", "simulation.reps")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be nonnegative", "simulation.master_seed")
        if self.ratio_delta is not None and self.ratio_delta <= 0:
            raise ConfigError("ratio_delta must be positive", "simulation.ratio_delta")

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "delta_grid": self.delta_grid.to_dict(),
            "sigma_grid": self.sigma_grid.to_dict(),
            "ratio_delta": self.ratio_delta,
            "series_points": self.series_points,
            "trial_z_points": self.trial_z_points,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    fixture: str | None = None
    distribution: DistributionSpec | None = None
    function_class: ClassSpec | None = None
    models: tuple[tuple[int, ...], ...] | None = None
    params: ParamSpec = field(default_factory=ParamSpec)
    simulation: SimulationSpec = field(default_factory=SimulationSpec)
    suites: tuple[str, ...] = ()

    def __post_init__(self):
        if self.fixture is None and (self.distribution is None or self.function_class is None):
            raise ConfigError(
                "either a fixture name or inline distribution and class required",
                "fixture",
            )
        for s in self.suites:
            if s not in SUITE_NAMES:
                raise ConfigError(
                    f"unknown suite {s!r}; valid: {', '.join(SUITE_NAMES)}", "suites"
                )

    def to_dict(self) -> dict:
        return {
            "fixture": self.fixture,
            "distribution": None if self.distribution is None else self.distribution.to_dict(),
            "class": None if self.function_class is None else self.function_class.to_dict(),
            "models": None if self.models is None else [list(m) for m in self.models],
            "params": self.params.to_dict(),
            "simulation": self.simulation.to_dict(),
            "suites": list(self.suites),
        }

    def override(self, seed: int | None = None, trials: int | None = None,
                 suites: tuple[str, ...] | None = None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, simulation=replace(cfg.simulation, master_seed=seed))
        if trials is not None:
            cfg = replace(cfg, simulation=replace(cfg.simulation, trials=trials))
        if suites is not None:
            cfg = replace(cfg, suites=tuple(suites))
        return cfg


def _parse_distribution(d, path: str) -> DistributionSpec:
    _expect(isinstance(d, dict), "expected an object", path)
    states = _get(d, "states", path, required=True)
    _expect(isinstance(states, list) and len(states) > 0, "expected a nonempty array",
            f"{path}.states")
    weights = _as_number_list(_get(d, "weights", path, required=True), f"{path}.weights")
    _expect(len(states) == len(weights), "states and weights must have equal length",
            f"{path}.weights")
    return DistributionSpec(states=tuple(states), weights=weights)


def _parse_class(d, path: str) -> ClassSpec:
    _expect(isinstance(d, dict), "expected an object", path)
    if "members" in d:
        members = d["members"]
        _expect(isinstance(members, list) and len(members) > 0,
                "expected a nonempty array of member rows", f"{path}.members")
        rows = tuple(
            _as_number_list(row, f"{path}.members[{i}]") for i, row in enumerate(members)
        )
        widths = {len(r) for r in rows}
        _expect(len(widths) == 1, "member rows must have equal length", f"{path}.members")
        return ClassSpec(members=rows)
    if "parametric" in d:
        p = d["parametric"]
        ppath = f"{path}.parametric"
        _expect(isinstance(p, dict), "expected an object", ppath)
        grid = _as_number_list(_get(p, "grid", ppath, required=True), f"{ppath}.grid")
        values = _get(p, "values", ppath, required=True)
        _expect(isinstance(values, list) and len(values) == len(grid),
                "one value row per grid point required", f"{ppath}.values")
        rows = tuple(
            _as_number_list(row, f"{ppath}.values[{i}]") for i, row in enumerate(values)
        )
        norm = _get(p, "norm", ppath, default={"kind": "abs", "scale": 1.0})
        _expect(isinstance(norm, dict), "expected an object", f"{ppath}.norm")
        kind = _get(norm, "kind", f"{ppath}.norm", default="abs")
        _expect(kind == "abs", "only the 'abs' norm kind is supported", f"{ppath}.norm.kind")
        scale = _as_float(_get(norm, "scale", f"{ppath}.norm", default=1.0),
                          f"{ppath}.norm.scale")
        return ClassSpec(param_grid=grid, param_values=rows, norm_kind=kind,
                         norm_scale=scale)
    raise ConfigError("class needs 'members' or 'parametric'", path)


def parse_config(doc: dict) -> ExperimentConfig:
    _expect(isinstance(doc, dict), "expected a JSON object", "")
    known = {"fixture", "distribution", "class", "models", "params", "simulation", "suites"}
    for key in doc:
        _expect(key in known, "unknown field", key)

    fixture = _get(doc, "fixture", "")
    if fixture is not None:
        _expect(isinstance(fixture, str), "expected a string", "fixture")

    dist = _get(doc, "distribution", "")
    dist_spec = None if dist is None else _parse_distribution(dist, "distribution")

    cls = _get(doc, "class", "")
    cls_spec = None if cls is None else _parse_class(cls, "class")

    models = _get(doc, "models", "")
    models_spec = None
    if models is not None:
        _expect(isinstance(models, list) and len(models) > 0,
                "expected a nonempty array of index lists", "models")
        models_spec = []
        for i, m in enumerate(models):
            _expect(isinstance(m, list) and len(m) > 0, "expected a nonempty index list",
                    f"models[{i}]")
            models_spec.append(tuple(_as_int(j, f"models[{i}][{k}]") for k, j in enumerate(m)))
        models_spec = tuple(models_spec)

    p = _get(doc, "params", "", default={})
    _expect(isinstance(p, dict), "expected an object", "params")
    t_schedule = _get(p, "t_schedule", "params")
    params = ParamSpec(
        t=_as_float(_get(p, "t", "params", default=2.0), "params.t"),
        q=_as_float(_get(p, "q", "params", default=2.0), "params.q"),
        eps=_as_float(_get(p, "eps", "params", default=0.25), "params.eps"),
        eps_bar=_as_float(_get(p, "eps_bar", "params", default=0.6), "params.eps_bar"),
        eta_n=_as_float(_get(p, "eta_n", "params", default=1.0), "params.eta_n"),
        n=_as_int(_get(p, "n", "params", default=200), "params.n"),
        t_schedule=None if t_schedule is None
        else _as_number_list(t_schedule, "params.t_schedule"),
    )

    s = _get(doc, "simulation", "", default={})
    _expect(isinstance(s, dict), "expected an object", "simulation")
    ratio_delta = _get(s, "ratio_delta", "simulation")
    sim = SimulationSpec(
        trials=_as_int(_get(s, "trials", "simulation", default=10000), "simulation.trials"),
        reps=_as_int(_get(s, "reps", "simulation", default=10000), "simulation.reps"),
        master_seed=_as_int(_get(s, "master_seed", "simulation", default=20060415),
                            "simulation.master_seed"),
        delta_grid=GridSpec.from_dict(
            _get(s, "delta_grid", "simulation", default=DEFAULT_DELTA_GRID),
            "simulation.delta_grid"),
        sigma_grid=GridSpec.from_dict(
            _get(s, "sigma_grid", "simulation", default=DEFAULT_SIGMA_GRID),
            "simulation.sigma_grid"),
        ratio_delta=None if ratio_delta is None
        else _as_float(ratio_delta, "simulation.ratio_delta"),
        series_points=_as_int(_get(s, "series_points", "simulation", default=64),
                              "simulation.series_points"),
        trial_z_points=_as_int(_get(s, "trial_z_points", "simulation", default=17),
                               "simulation.trial_z_points"),
    )
    suites = _get(doc, "suites", "", default=[])
    _expect(isinstance(suites, list), "expected an array of suite names", "suites")
    for i, name in enumerate(suites):
        _expect(isinstance(name, str), "expected a string", f"suites[{i}]")

    return ExperimentConfig(
        fixture=fixture,
        distribution=dist_spec,
        function_class=cls_spec,
        models=models_spec,
        params=params,
        simulation=sim,
        suites=tuple(suites),
    )


def loads_config(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", line=e.lineno) from e
    return parse_config(doc)


def load_config(path: str | Path) -> ExperimentConfig:
    return loads_config(Path(path).read_text())


def emit_config(config: ExperimentConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
