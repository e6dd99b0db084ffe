import numpy as np
import pytest

from riskbounds.measures import (
    DiscreteDistribution,
    EmpiricalMeasure,
    FunctionClass,
    LossFunction,
    empirical_mean,
    erm,
    excess_risk,
    mean,
    rescale_to_unit,
    risk_minimizer,
    sup_norm_dev,
    variance,
)

UNIFORM2 = DiscreteDistribution(("a", "b"), np.array([0.5, 0.5]))
POINT = DiscreteDistribution(("a", "b"), np.array([1.0, 0.0]))


def test_mean_hand_arithmetic():
    assert mean(UNIFORM2, LossFunction([0.4, 0.0])) == pytest.approx(0.2, abs=1e-15)


def test_mean_zero_function():
    assert mean(UNIFORM2, LossFunction([0.0, 0.0])) == 0.0


def test_mean_point_mass():
    assert mean(POINT, LossFunction([3.5, -1.0])) == 3.5


def test_mean_state_mismatch():
    with pytest.raises(ValueError, match="state-space mismatch"):
        mean(UNIFORM2, LossFunction([1.0, 2.0, 3.0]))


def test_empirical_mean_counts():
    Pn = EmpiricalMeasure([3, 1], 4)
    assert empirical_mean(Pn, LossFunction([1.0, 5.0])) == pytest.approx(2.0, abs=1e-15)


def test_empirical_mean_constant():
    Pn = EmpiricalMeasure([7, 2], 9)
    assert empirical_mean(Pn, LossFunction([3.0, 3.0])) == pytest.approx(3.0)


def test_empirical_mean_single_support():
    Pn = EmpiricalMeasure([4, 0], 4)
    assert empirical_mean(Pn, LossFunction([0.4, 0.0])) == pytest.approx(0.4, abs=1e-15)


def test_empirical_mean_empty_sample():
    with pytest.raises(ValueError, match="empty sample"):
        empirical_mean(EmpiricalMeasure([0, 0], 0), LossFunction([1.0, 2.0]))


def test_variance_hand_arithmetic():
    assert variance(UNIFORM2, LossFunction([0.4, 0.0])) == pytest.approx(0.04, abs=1e-15)


def test_variance_constant_is_zero():
    assert variance(UNIFORM2, LossFunction([2.5, 2.5])) == pytest.approx(0.0, abs=1e-15)


def test_variance_symmetric_unit():
    assert variance(UNIFORM2, LossFunction([1.0, -1.0])) == pytest.approx(1.0, abs=1e-15)


def test_variance_nonnegative_and_shift_invariant():
    rng = np.random.Generator(np.random.Philox(1))
    for _ in range(50):
        k = rng.integers(2, 8)
        w = rng.random(k)
        P = DiscreteDistribution(tuple(range(k)), w / w.sum())
        f = rng.normal(size=k)
        c = rng.normal() * 10
        v = variance(P, LossFunction(f))
        assert v >= 0.0
        assert variance(P, LossFunction(f + c)) == pytest.approx(v, abs=1e-10)


def test_excess_risk_two_function():
    F = FunctionClass([[0.0, 0.0], [0.4, 0.0]])
    assert excess_risk(UNIFORM2, F, LossFunction([0.4, 0.0])) == pytest.approx(0.2, abs=1e-15)


def test_excess_risk_zero_at_minimizer():
    F = FunctionClass([[0.0, 0.0], [0.4, 0.0]])
    assert excess_risk(UNIFORM2, F, LossFunction([0.0, 0.0])) == 0.0


def test_excess_risk_singleton():
    F = FunctionClass([[1.0, 2.0]])
    assert excess_risk(UNIFORM2, F, LossFunction([1.0, 2.0])) == 0.0


def test_excess_risk_nonnegative_on_members():
    rng = np.random.Generator(np.random.Philox(2))
    for _ in range(20):
        F = FunctionClass(rng.normal(size=(12, 3)))
        w = rng.random(3)
        P = DiscreteDistribution(("x", "y", "z"), w / w.sum())
        fbar = risk_minimizer(P, F)
        for i in range(F.size):
            e = excess_risk(P, F, F.member(i))
            assert e >= -1e-12
            if i == fbar:
                assert e == 0.0


def test_erm_exhaustive_comparison():
    F = FunctionClass([[0.0, 0.0], [-1.0, 3.0]])
    assert erm(EmpiricalMeasure([4, 0], 4), F) == 1


def test_erm_singleton_and_tie():
    assert erm(EmpiricalMeasure([2, 1], 3), FunctionClass([[1.0, 1.0]])) == 0
    assert erm(EmpiricalMeasure([2, 1], 3), FunctionClass([[1.0, 1.0], [1.0, 1.0]])) == 0


def test_erm_matches_exhaustive_argmin_large_class():
    rng = np.random.Generator(np.random.Philox(3))
    for size in (10, 500, 10_000):
        F = FunctionClass(rng.normal(size=(size, 5)))
        counts = rng.multinomial(60, [0.2] * 5)
        Pn = EmpiricalMeasure(counts, 60)
        best = erm(Pn, F)
        means = [empirical_mean(Pn, F.member(i)) for i in range(size)]
        assert best == int(np.argmin(means))


def test_rescale_to_unit_halves():
    F = FunctionClass([[0.0, 0.0], [2.0, 0.0]])
    rs = rescale_to_unit(F, UNIFORM2)
    assert rs.scale == 2.0
    assert np.allclose(rs.function_class.values, [[0.0, 0.0], [1.0, 0.0]])
    fbar = risk_minimizer(UNIFORM2, rs.function_class)
    devs = [
        sup_norm_dev(rs.function_class.member(i), rs.function_class.member(fbar))
        for i in range(2)
    ]
    assert max(devs) == pytest.approx(1.0)


def test_rescale_noop_cases():
    F = FunctionClass([[0.0, 0.0], [0.4, 0.0]])
    rs = rescale_to_unit(F, UNIFORM2)
    assert rs.scale == 1.0 and rs.function_class is F
    S = FunctionClass([[5.0, 5.0]])
    rs2 = rescale_to_unit(S, UNIFORM2)
    assert rs2.scale == 1.0 and rs2.function_class is S


def test_rescale_establishes_unit_band():
    rng = np.random.Generator(np.random.Philox(4))
    F = FunctionClass(rng.normal(scale=10, size=(30, 4)))
    w = rng.random(4)
    P = DiscreteDistribution(tuple("abcd"), w / w.sum())
    rs = rescale_to_unit(F, P)
    G = rs.function_class
    fbar = risk_minimizer(P, G)
    for i in range(G.size):
        assert sup_norm_dev(G.member(i), G.member(fbar)) <= 1.0 + 1e-12


def test_sup_norm_dev():
    assert sup_norm_dev(LossFunction([0.4, 0.0]), LossFunction([0.0, 0.0])) == 0.4
    f = LossFunction([1.0, -1.0])
    assert sup_norm_dev(f, f) == 0.0
    assert sup_norm_dev(LossFunction([1.0, -1.0]), LossFunction([-1.0, 1.0])) == 2.0
    with pytest.raises(ValueError, match="state-space mismatch"):
        sup_norm_dev(LossFunction([1.0]), LossFunction([1.0, 2.0]))


def test_distribution_validation():
    with pytest.raises(ValueError):
        DiscreteDistribution((), np.array([]))
    with pytest.raises(ValueError):
        DiscreteDistribution(("a", "a"), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        DiscreteDistribution(("a", "b"), np.array([0.7, 0.4]))
    with pytest.raises(ValueError):
        DiscreteDistribution(("a", "b"), np.array([-0.1, 1.1]))


def test_parametric_class_requires_convexity():
    grid = np.linspace(-1, 1, 9)
    convex = (grid[:, None] - np.array([0.3, -0.2])[None, :]) ** 2
    FunctionClass.parametric(grid, convex)  # fine
    with pytest.raises(ValueError, match="convex"):
        FunctionClass.parametric(grid, -convex)


def test_empirical_mean_law_of_large_numbers():
    # averaging the empirical mean over many independent samples approaches
    # the exact mean within 4 sigma / sqrt(n * trials)
    from riskbounds.montecarlo import ROLE_PRIMARY, StreamKey, draw_sample

    f = LossFunction([0.4, 0.0])
    n, trials = 1000, 200
    total = 0.0
    for i in range(trials):
        s = draw_sample(UNIFORM2, n, StreamKey(321, i, ROLE_PRIMARY))
        total += empirical_mean(EmpiricalMeasure.from_sample(s, 2), f)
    avg = total / trials
    sigma = variance(UNIFORM2, f) ** 0.5
    assert abs(avg - 0.2) <= 4.0 * sigma / np.sqrt(n * trials)
