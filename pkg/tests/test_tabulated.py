import numpy as np
import pytest

from riskbounds.tabulated import TabulatedFunction


def test_interpolation_inside_grid():
    f = TabulatedFunction([0.0, 1.0, 2.0], [0.0, 1.0, 4.0])
    assert f(0.5) == pytest.approx(0.5)
    assert f(1.5) == pytest.approx(2.5)
    assert np.allclose(f(np.array([0.0, 2.0])), [0.0, 4.0])


def test_clamp_extrapolation():
    f = TabulatedFunction([1.0, 2.0], [3.0, 5.0], "clamp")
    assert f(0.0) == 3.0
    assert f(9.0) == 5.0


def test_linear_extrapolation():
    f = TabulatedFunction([1.0, 2.0], [3.0, 5.0], "linear")
    assert f(0.0) == pytest.approx(1.0)
    assert f(3.0) == pytest.approx(7.0)


def test_infinite_extrapolation():
    f = TabulatedFunction([0.0, 1.0], [0.0, 2.0], "infinite")
    assert f(2.0) == np.inf
    assert f(-1.0) == 0.0  # clamp on the left
    assert f.is_finite_at(1.0)
    assert not f.is_finite_at(1.5)


def test_validation():
    with pytest.raises(ValueError, match="strictly increasing"):
        TabulatedFunction([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError, match="two abscissae"):
        TabulatedFunction([0.0], [1.0])
    with pytest.raises(ValueError, match="finite"):
        TabulatedFunction([0.0, 1.0], [0.0, np.inf])
    with pytest.raises(ValueError, match="extrapolation"):
        TabulatedFunction([0.0, 1.0], [0.0, 1.0], "wrap")


def test_dict_round_trip():
    f = TabulatedFunction([0.0, 0.5, 1.0], [0.0, 0.2, 0.9], "infinite")
    g = TabulatedFunction.from_dict(f.to_dict())
    assert np.array_equal(f.grid, g.grid)
    assert np.array_equal(f.values, g.values)
    assert f.extrapolation == g.extrapolation


def test_max_slope():
    f = TabulatedFunction([0.0, 1.0, 3.0], [0.0, 1.0, 2.0])
    assert f.max_slope == pytest.approx(1.0)
