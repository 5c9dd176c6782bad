"""Special functions behind the closed-form generator derivatives.

Stirling numbers are exact integers.  Polylogarithms of non-positive
integer order use the finite rational form

    Li_{-n}(z) = sum_{k=0}^{n} k! S(n+1, k+1) w^(k+1),   w = z / (1 - z),

which is what repeated application of ``z d/dz`` to ``z/(1-z)`` produces.
It stays exact as ``z -> 1-`` where the defining power series crawls.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "stirling_first",
    "stirling_second",
    "polylog_negint",
    "polylog_negint_from_w",
    "polylog_coefficients",
    "gumbel_poly_coeff",
    "gumbel_poly_coeffs",
    "joe_poly_coeff",
    "joe_poly_coeffs",
    "debye1",
]


def _check_indices(i: int, j: int) -> None:
    if i < 0 or j < 0:
        raise DomainError(f"Stirling indices must be non-negative, got ({i}, {j})")


@lru_cache(maxsize=None)
def stirling_first(i: int, j: int) -> int:
    """Signed Stirling number of the first kind s(i, j)."""
    _check_indices(i, j)
    if i == j:
        return 1
    if i == 0 or j == 0 or j > i:
        return 0
    return stirling_first(i - 1, j - 1) - (i - 1) * stirling_first(i - 1, j)


@lru_cache(maxsize=None)
def stirling_second(i: int, j: int) -> int:
    """Stirling number of the second kind S(i, j)."""
    _check_indices(i, j)
    if i == j:
        return 1
    if i == 0 or j == 0 or j > i:
        return 0
    return j * stirling_second(i - 1, j) + stirling_second(i - 1, j - 1)


@lru_cache(maxsize=None)
def polylog_coefficients(n: int) -> tuple[int, ...]:
    """Integer weights ``k! S(n+1, k+1)`` for ``k = 0..n``."""
    if n < 0:
        raise DomainError(f"order must be >= 0, got {n}")
    return tuple(math.factorial(k) * stirling_second(n + 1, k + 1) for k in range(n + 1))


def polylog_negint_from_w(n: int, w):
    """``Li_{-n}`` expressed through ``w = z/(1-z)``."""
    coeffs = polylog_coefficients(n)
    w = np.asarray(w, dtype=float)
    acc = np.zeros_like(w)
    for c in reversed(coeffs):
        acc = (acc + c) * w
    return acc if acc.ndim else float(acc)


def polylog_negint(n: int, z):
    """Polylogarithm ``Li_{-n}(z)`` for integer ``n >= 0`` and ``|z| < 1``."""
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= 1.0):
        raise DomainError("polylog_negint requires |z| < 1")
    return polylog_negint_from_w(n, z / (1.0 - z))


@lru_cache(maxsize=None)
def _gumbel_coeffs_exact(i: int, alpha: Fraction) -> tuple[Fraction, ...]:
    out = []
    for k in range(1, i + 1):
        acc = Fraction(0)
        for j in range(k, i + 1):
            acc += alpha**j * stirling_first(i, j) * stirling_second(j, k)
        out.append(acc if (i - k) % 2 == 0 else -acc)
    return tuple(out)


def gumbel_poly_coeffs(i: int, theta: float) -> np.ndarray:
    """Coefficients ``a_{i1}..a_{ii}`` of the Gumbel derivative polynomial.

    The Stirling sums cancel heavily, so they are accumulated in exact
    rational arithmetic on the binary value of ``1/theta``.
    """
    if i < 1:
        raise DomainError(f"polynomial index must be >= 1, got {i}")
    alpha = Fraction(1.0 / theta)
    return np.array([float(c) for c in _gumbel_coeffs_exact(i, alpha)])


def gumbel_poly_coeff(i: int, k: int, theta: float) -> float:
    if not 1 <= k <= i:
        raise DomainError(f"need 1 <= k <= i, got i={i}, k={k}")
    return float(gumbel_poly_coeffs(i, theta)[k - 1])


def joe_poly_coeffs(i: int, theta: float) -> np.ndarray:
    """Coefficients ``S(i,k) * Gamma(k - a)/Gamma(1 - a)`` with ``a = 1/theta``."""
    if i < 1:
        raise DomainError(f"polynomial index must be >= 1, got {i}")
    alpha = 1.0 / theta
    out = np.empty(i)
    rising = 1.0
    for k in range(1, i + 1):
        if k > 1:
            rising *= (k - 1) - alpha
        out[k - 1] = stirling_second(i, k) * rising
    return out


def joe_poly_coeff(i: int, k: int, theta: float) -> float:
    if not 1 <= k <= i:
        raise DomainError(f"need 1 <= k <= i, got i={i}, k={k}")
    return float(joe_poly_coeffs(i, theta)[k - 1])


def _t_over_expm1(t):
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    nz = t != 0.0
    out[nz] = t[nz] / np.expm1(t[nz])
    return out


def debye1(x: float) -> float:
    """Debye function ``D1(x) = (1/x) int_0^x t/(e^t - 1) dt`` for ``x > 0``."""
    from .quadrature import integrate

    if x <= 0:
        raise DomainError(f"debye1 needs x > 0, got {x}")
    res = integrate(_t_over_expm1, 0.0, x, abs_tol=1e-15, rel_tol=1e-14)
    return res.value / x
