"""Built-in fixtures and assembly of experiment objects from a config.

Fixtures are deterministic: the seeded ones always use their own fixed
generator, never the experiment's master seed, so the same name denotes the
same class everywhere.  Every bundle is rescaled so all members stay within
the unit deviation band around the risk minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import BoundParams
from .config import ConfigError, ExperimentConfig
from .measures import (
    DiscreteDistribution,
    FunctionClass,
    ParameterNorm,
    rescale_to_unit,
)
from .selection import ModelFamily, default_t_schedule

RANDOM20_SEED = 12
NESTED3_SEED = 3


@dataclass(frozen=True)
class Fixture:
    distribution: DiscreteDistribution
    function_class: FunctionClass
    model_indices: tuple[tuple[int, ...], ...] | None = None


def two_state() -> Fixture:
    P = DiscreteDistribution(("s0", "s1"), np.array([0.5, 0.5]))
    F = FunctionClass(np.array([[0.0, 0.0], [0.4, 0.0]]))
    return Fixture(P, F)


def random20() -> Fixture:
    P = DiscreteDistribution(
        ("s0", "s1", "s2", "s3", "s4"),
        np.array([0.3, 0.25, 0.2, 0.15, 0.1]),
    )
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(RANDOM20_SEED)))
    values = rng.uniform(0.0, 1.0, size=(20, 5))
    return Fixture(P, FunctionClass(values))


def quadratic() -> Fixture:
    """Scaled quadratic loss on a symmetric two-point space, 1-d parameter grid."""
    x = np.array([-0.5, 0.5])
    P = DiscreteDistribution(("minus", "plus"), np.array([0.5, 0.5]))
    grid = np.linspace(-0.5, 0.5, 41)
    values = 0.5 * (x[None, :] - grid[:, None]) ** 2
    # norm scale chosen so scaled deviations stay below the norm over the grid
    F = FunctionClass.parametric(grid, values, ParameterNorm(0.75))
    return Fixture(P, F)


def nested3() -> Fixture:
    P = DiscreteDistribution(
        ("s0", "s1", "s2", "s3"),
        np.array([0.4, 0.3, 0.2, 0.1]),
    )
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(NESTED3_SEED)))
    values = rng.uniform(0.0, 1.0, size=(12, 4))
    models = (tuple(range(4)), tuple(range(8)), tuple(range(12)))
    return Fixture(P, FunctionClass(values), models)


FIXTURES = {
    "two-state": two_state,
    "random20": random20,
    "quadratic": quadratic,
    "nested3": nested3,
}


@dataclass(frozen=True)
class ExperimentBundle:
    """Everything a run needs: distribution, rescaled class, family, knobs."""

    distribution: DiscreteDistribution
    function_class: FunctionClass
    scale: float
    family: ModelFamily | None
    params: BoundParams


def _inline_fixture(config: ExperimentConfig) -> Fixture:
    d = config.distribution
    c = config.function_class
    try:
        P = DiscreteDistribution(tuple(d.states), np.asarray(d.weights, dtype=float))
    except ValueError as e:
        raise ConfigError(str(e), "distribution") from e
    try:
        if c.members is not None:
            F = FunctionClass(np.asarray(c.members, dtype=float))
        else:
            F = FunctionClass.parametric(
                np.asarray(c.param_grid, dtype=float),
                np.asarray(c.param_values, dtype=float),
                ParameterNorm(c.norm_scale),
            )
    except ValueError as e:
        raise ConfigError(str(e), "class") from e
    if F.n_states != P.n_states:
        raise ConfigError("member rows must match the number of states", "class")
    return Fixture(P, F, config.models)


def build_bundle(config: ExperimentConfig) -> ExperimentBundle:
    if config.fixture is not None:
        if config.fixture not in FIXTURES:
            raise ConfigError(
                f"unknown fixture {config.fixture!r}; valid: {', '.join(sorted(FIXTURES))}",
                "fixture",
            )
        fixture = FIXTURES[config.fixture]()
        model_indices = config.models if config.models is not None else fixture.model_indices
    else:
        fixture = _inline_fixture(config)
        model_indices = config.models

    rescaled = rescale_to_unit(fixture.function_class, fixture.distribution)
    p = config.params
    try:
        params = BoundParams(
            t=p.t, q=p.q, eps=p.eps, n=p.n, eps_bar=p.eps_bar, eta_n=p.eta_n
        )
    except ValueError as e:
        raise ConfigError(str(e), "params") from e

    family = None
    if model_indices is not None:
        size = rescaled.function_class.size
        for i, idx in enumerate(model_indices):
            for j in idx:
                if not 0 <= j < size:
                    raise ConfigError(
                        f"member index {j} out of range (class has {size})",
                        f"models[{i}]",
                    )
        t_schedule = p.t_schedule or default_t_schedule(p.t, len(model_indices))
        if len(t_schedule) != len(model_indices):
            raise ConfigError("one t_schedule entry per model required", "params.t_schedule")
        try:
            family = ModelFamily.from_indices(
                rescaled.function_class, model_indices, t_schedule, p.eps
            )
        except ValueError as e:
            raise ConfigError(str(e), "models") from e

    return ExperimentBundle(
        distribution=fixture.distribution,
        function_class=rescaled.function_class,
        scale=rescaled.scale,
        family=family,
        params=params,
    )
