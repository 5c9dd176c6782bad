import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from copula_ccvar.special import (
    debye1,
    gumbel_poly_coeff,
    joe_poly_coeff,
    polylog_coefficients,
    polylog_negint,
    stirling_first,
    stirling_second,
)


def test_stirling_small_values():
    assert stirling_second(3, 2) == 3
    assert stirling_first(3, 2) == -3
    assert stirling_second(5, 3) == 25
    assert stirling_first(5, 1) == 24
    assert stirling_first(0, 0) == stirling_second(0, 0) == 1
    assert stirling_second(4, 0) == 0


@pytest.mark.parametrize("n", range(1, 9))
def test_stirling_first_expands_falling_factorial(n):
    # x(x-1)...(x-n+1) = sum_k s(n,k) x^k
    coeffs = np.poly1d([1.0])
    for j in range(n):
        coeffs = coeffs * np.poly1d([1.0, -j])
    expected = coeffs.coeffs[::-1]
    got = [stirling_first(n, k) for k in range(n + 1)]
    assert got == [int(round(c)) for c in expected]


@pytest.mark.parametrize("n", range(1, 9))
def test_stirling_second_row_sums_are_bell_numbers(n):
    assert sum(stirling_second(n, k) for k in range(n + 1)) == int(mp.bell(n))


def test_polylog_examples():
    assert polylog_negint(0, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert polylog_negint(1, 0.5) == pytest.approx(2.0, abs=1e-15)


def _reference(n, z):
    # mpmath at default precision loses ~4 digits here for z near -1
    with mp.workdps(40):
        return float(mp.polylog(-n, mp.mpf(z)))


@given(st.integers(0, 9), st.floats(0.0, 0.999))
def test_polylog_matches_mpmath(n, z):
    # the range used by the generators: all terms positive, full relative accuracy
    assert polylog_negint(n, z) == pytest.approx(_reference(n, z), rel=1e-11, abs=1e-300)


@given(st.integers(0, 9), st.floats(-0.95, 0.0))
def test_polylog_negative_argument_within_rounding_bound(n, z):
    # alternating terms: Li has roots here, so the bound is eps times the sum of |terms|
    w = z / (1 - z)
    scale = sum(abs(c) * abs(w) ** (k + 1) for k, c in enumerate(polylog_coefficients(n)))
    assert abs(polylog_negint(n, z) - _reference(n, z)) <= 64 * np.finfo(float).eps * max(scale, 1e-300)


def test_polylog_rejects_outside_unit_disc():
    with pytest.raises(ValueError):
        polylog_negint(2, 1.0)


def _gumbel_psi_derivative(theta, k, s):
    return mp.diff(lambda x: mp.e ** (-(x ** (1 / mp.mpf(theta)))), s, k)


@pytest.mark.parametrize("theta", [1.3, 2.0, 4.5])
@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_gumbel_coefficients_reproduce_derivatives(theta, k):
    # psi^{(k)}(s) = (-1)^k psi(s) s^{-k} sum_j a_kj s^{j/theta}
    s = 0.7
    alpha = 1.0 / theta
    poly = sum(gumbel_poly_coeff(k, j, theta) * s ** (j * alpha) for j in range(1, k + 1))
    value = (-1) ** k * math.exp(-(s ** alpha)) * s ** (-k) * poly
    with mp.workdps(30):
        ref = float(_gumbel_psi_derivative(theta, k, s))
    assert value == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("theta", [1.5, 3.0])
@pytest.mark.parametrize("k", [1, 2, 4])
def test_joe_coefficients_reproduce_derivatives(theta, k):
    s = 0.9
    alpha = 1.0 / theta
    psi = lambda x: 1 - (1 - mp.e ** (-x)) ** (1 / mp.mpf(theta))  # noqa: E731
    with mp.workdps(30):
        ref = float(mp.diff(psi, s, k))
    x = 1.0 / math.expm1(s)
    poly = sum(joe_poly_coeff(k, j, theta) * x ** (j - 1) for j in range(1, k + 1))
    value = (-1) ** k * alpha * math.exp(-s) * (-math.expm1(-s)) ** (alpha - 1) * poly
    assert value == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("x", [1e-3, 0.5, 1.0, 5.0, 30.0])
def test_debye1_against_mpmath(x):
    ref = float(mp.quad(lambda t: t / mp.expm1(t), [0, x]) / x)
    assert debye1(x) == pytest.approx(ref, rel=1e-12)
