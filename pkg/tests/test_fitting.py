"""Polynomial fitting tests with synthetic generators."""

from random import Random

import pytest

from dualpath_sim.fitting import fit_polynomial

# Representative published-style coefficient sets, ascending order.
LINE_SETS = [
    (5.2110, 0.0464),
    (0.0661, 0.0757),
]
QUAD_SETS = [
    (7.0096, 0.1614, -0.0002),
    (0.5352, 0.1064, -0.0003),
    (0.0661, 0.0757, -0.0002),
]


def poly(coeffs, x):
    return sum(c * x ** k for k, c in enumerate(coeffs))


@pytest.mark.parametrize("coeffs", LINE_SETS)
def test_exact_linear_recovery(coeffs):
    xs = [float(t) for t in range(1, 101)]
    ys = [poly(coeffs, x) for x in xs]
    fit = fit_polynomial(ys, 1, xs)
    for got, want in zip(fit.coefficients, coeffs):
        assert abs(got - want) <= 1e-9
    assert fit.r_squared == pytest.approx(1.0)


@pytest.mark.parametrize("coeffs", QUAD_SETS)
def test_exact_quadratic_recovery(coeffs):
    xs = [float(t) for t in range(1, 101)]
    ys = [poly(coeffs, x) for x in xs]
    fit = fit_polynomial(ys, 2, xs)
    for got, want in zip(fit.coefficients, coeffs):
        assert abs(got - want) <= 1e-9
    assert fit.r_squared == pytest.approx(1.0)


def test_constant_series_degree_two_returns_exact_zeros():
    fit = fit_polynomial([4.25] * 30, 2)
    assert fit.coefficients == (4.25, 0.0, 0.0)
    assert fit.r_squared == 1.0


def test_constant_series_degree_one():
    fit = fit_polynomial([7.0] * 10, 1)
    assert fit.coefficients == (7.0, 0.0)


def test_noisy_quadratic_recovered_within_three_sigma():
    rng = Random(42)
    true = (2.0, -0.5, 0.03)
    sigma = 0.01
    xs = [float(t) for t in range(1, 101)]
    ys = [poly(true, x) + rng.gauss(0, sigma) for x in xs]
    fit = fit_polynomial(ys, 2, xs)
    # Crude coefficient-error bound: 3 sigma scaled by the design spread.
    assert abs(fit.coefficients[2] - true[2]) < 3 * sigma
    assert abs(fit.coefficients[1] - true[1]) < 3 * sigma * 10
    assert abs(fit.coefficients[0] - true[0]) < 3 * sigma * 100
    assert fit.r_squared > 0.99


def test_default_x_is_one_based_ticks():
    ys = [poly((1.0, 2.0), x) for x in range(1, 21)]
    fit = fit_polynomial(ys, 1)
    assert fit.coefficients[0] == pytest.approx(1.0, abs=1e-9)
    assert fit.coefficients[1] == pytest.approx(2.0, abs=1e-9)


def test_fit_result_is_callable():
    fit = fit_polynomial([poly((1.0, 0.5, 0.25), x) for x in range(1, 11)], 2)
    assert fit(4.0) == pytest.approx(poly((1.0, 0.5, 0.25), 4.0))
    assert fit.degree == 2


def test_validation_errors():
    with pytest.raises(ValueError):
        fit_polynomial([1.0, 2.0], 2)
    with pytest.raises(ValueError):
        fit_polynomial([1.0, 2.0, 3.0], -1)
    with pytest.raises(ValueError):
        fit_polynomial([1.0, 2.0, 3.0], 1, [1.0, 2.0])
