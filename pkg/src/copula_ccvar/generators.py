"""Archimedean generators, their inverses and inverse-generator derivatives.

Everything here is vectorized over the point argument.  Derivatives of the
inverse generator ``psi = phi^{-1}`` are produced in log-magnitude form by
:func:`log_abs_dpsi`; their sign is always ``(-1)^k`` for the k-th
derivative, so storing the log of the magnitude loses nothing and keeps
large orders and strong dependence from overflowing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, logsumexp

from . import special
from .errors import CopulaOverflowError, DomainError, ParameterError, UnattainableTauError

__all__ = [
    "Family",
    "ARCHIMEDEAN_FAMILIES",
    "CopulaSpec",
    "TailCoefficients",
    "phi",
    "phi_prime",
    "log_abs_phi_prime",
    "phi_inv",
    "log_abs_dpsi",
    "f_aux",
    "f_aux_mc",
    "kendall_tau",
    "tau_inverse",
    "tail_dependence",
    "copula_cdf",
    "copula_density",
    "copula_logpdf",
]


class Family(str, Enum):
    INDEPENDENCE = "independence"
    CLAYTON = "clayton"
    FRANK = "frank"
    GUMBEL = "gumbel"
    JOE = "joe"
    AMH = "amh"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"indep": "independence", "independent": "independence",
                   "product": "independence", "ali-mikhail-haq": "amh"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(f.value for f in cls)
            raise ParameterError(f"unknown copula family {value!r}; expected one of {names}") from None

    def __str__(self) -> str:
        return self.value


ARCHIMEDEAN_FAMILIES = (Family.CLAYTON, Family.FRANK, Family.GUMBEL, Family.JOE, Family.AMH)

# (lower, upper, lower_closed)
_THETA_RANGE = {
    Family.CLAYTON: (0.0, math.inf, False),
    Family.FRANK: (0.0, math.inf, False),
    Family.GUMBEL: (1.0, math.inf, True),
    Family.JOE: (1.0, math.inf, True),
    Family.AMH: (0.0, 1.0, True),
}


def theta_range(family) -> tuple[float, float, bool]:
    """Admissible ``(lower, upper, lower_closed)``; the upper end is always open."""
    return _THETA_RANGE[Family.parse(family)]


@dataclass(frozen=True)
class CopulaSpec:
    """An exchangeable Archimedean copula: family, parameter and dimension."""

    family: Family
    theta: float | None = None
    dim: int = 2

    def __post_init__(self):
        fam = Family.parse(self.family)
        object.__setattr__(self, "family", fam)
        if int(self.dim) != self.dim or self.dim < 2:
            raise ParameterError(f"dimension must be an integer >= 2, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        if fam is Family.INDEPENDENCE:
            object.__setattr__(self, "theta", None)
            return
        if self.theta is None:
            raise ParameterError(f"{fam.value} copula needs a theta")
        theta = float(self.theta)
        lo, hi, closed = _THETA_RANGE[fam]
        ok = np.isfinite(theta) and theta < hi and (theta >= lo if closed else theta > lo)
        if not ok:
            bracket = "[" if closed else "("
            raise ParameterError(
                f"theta={theta!r} outside the {fam.value} range {bracket}{lo:g}, {hi:g})"
            )
        object.__setattr__(self, "theta", theta)

    def with_theta(self, theta) -> "CopulaSpec":
        return replace(self, theta=theta)

    def with_dim(self, dim: int) -> "CopulaSpec":
        return replace(self, dim=dim)

    def __str__(self) -> str:
        if self.family is Family.INDEPENDENCE:
            return f"independence(d={self.dim})"
        return f"{self.family.value}(theta={self.theta:g}, d={self.dim})"


@dataclass(frozen=True)
class TailCoefficients:
    lambda_lower: float
    lambda_upper: float


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def _as_open_unit(t, name="t", right_closed=False):
    t = np.asarray(t, dtype=float)
    bad = ~(t > 0.0) | ((t > 1.0) if right_closed else (t >= 1.0))
    if np.any(bad):
        rng = "(0, 1]" if right_closed else "(0, 1)"
        raise DomainError(f"{name} must lie in {rng}")
    return t


def _log1mexp(s):
    """``log(1 - exp(-s))`` for ``s > 0``, accurate at both ends."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(s > math.log(2.0), np.log1p(-np.exp(-s)), np.log(-np.expm1(-s)))


def _log_expm1(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(x > 30.0, x + np.log1p(-np.exp(-x)), np.log(np.expm1(x)))


def _log_poly(coeffs, logx, first_power=0):
    """``log sum_j c_j x^(first_power + j)`` for non-negative ``c_j``."""
    coeffs = np.asarray(coeffs, dtype=float)
    logx = np.asarray(logx, dtype=float)
    powers = first_power + np.arange(coeffs.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        logc = np.log(coeffs)
        terms = np.where(powers == 0, logc, logc + powers * logx[..., None])
    return logsumexp(terms, axis=-1)


# ---------------------------------------------------------------- generators


def phi(spec: CopulaSpec, t):
    """Generator ``phi(t)`` on ``(0, 1]``."""
    t = _as_open_unit(t, right_closed=True)
    fam, th = spec.family, spec.theta
    with np.errstate(divide="ignore"):
        if fam is Family.INDEPENDENCE:
            out = -np.log(t)
        elif fam is Family.CLAYTON:
            out = np.expm1(-th * np.log(t))
        elif fam is Family.FRANK:
            # ratio = expm1(-th t) / expm1(-th); log1p(ratio - 1) only when ratio is near 1
            ratio = np.expm1(-th * t) / math.expm1(-th)
            ratio_m1 = -np.exp(-th * t) * np.expm1(-th * (1.0 - t)) / math.expm1(-th)
            out = np.where(ratio < 0.5, -np.log(ratio), -np.log1p(ratio_m1))
        elif fam is Family.GUMBEL:
            out = (-np.log(t)) ** th
        elif fam is Family.JOE:
            lp = th * np.log1p(-t)
            out = np.where(lp < -math.log(2.0), -np.log1p(-np.exp(lp)), -np.log(-np.expm1(lp)))
        else:
            out = np.log1p(-th * (1.0 - t)) - np.log(t)
    return _out(np.maximum(out, 0.0))


def phi_prime(spec: CopulaSpec, t):
    """Derivative ``phi'(t)`` on ``(0, 1)``; strictly negative."""
    return _out(-np.exp(log_abs_phi_prime(spec, t)))


def log_abs_phi_prime(spec: CopulaSpec, t):
    """``log|phi'(t)|`` on ``(0, 1)``."""
    t = _as_open_unit(t)
    fam, th = spec.family, spec.theta
    logt = np.log(t)
    if fam is Family.INDEPENDENCE:
        out = -logt
    elif fam is Family.CLAYTON:
        out = math.log(th) - (th + 1.0) * logt
    elif fam is Family.FRANK:
        out = math.log(th) - _log_expm1(th * t)
    elif fam is Family.GUMBEL:
        out = math.log(th) + (th - 1.0) * np.log(-logt) - logt
    elif fam is Family.JOE:
        l1t = np.log1p(-t)
        out = math.log(th) + (th - 1.0) * l1t - np.log(-np.expm1(th * l1t))
    else:
        out = math.log1p(-th) - logt - np.log1p(-th * (1.0 - t))
    return _out(out)


def phi_inv(spec: CopulaSpec, s):
    """Inverse generator ``psi(s)`` for ``s >= 0`` (``+inf`` maps to 0)."""
    s = np.asarray(s, dtype=float)
    if np.any(~(s >= 0.0)):
        raise DomainError("phi_inv needs s >= 0")
    fam, th = spec.family, spec.theta
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if fam is Family.INDEPENDENCE:
            out = np.exp(-s)
        elif fam is Family.CLAYTON:
            out = np.exp(-np.log1p(s) / th)
        elif fam is Family.FRANK:
            c = -math.expm1(-th)
            x = c * np.exp(-s)
            near_one = -np.expm1(-s) + np.exp(-th - s)
            out = np.where(x > 0.5, -np.log(near_one), -np.log1p(-x)) / th
        elif fam is Family.GUMBEL:
            out = np.exp(-(s ** (1.0 / th)))
        elif fam is Family.JOE:
            out = -np.expm1(_log1mexp(s) / th)
        else:
            es = np.exp(-s)
            out = (1.0 - th) * es / (1.0 - th * es)
    out = np.where(np.isinf(s), 0.0, out)
    return _out(out)


# -------------------------------------------------- inverse-generator derivatives


@lru_cache(maxsize=512)
def _gumbel_coeffs(k: int, theta: float) -> np.ndarray:
    return special.gumbel_poly_coeffs(k, theta)


@lru_cache(maxsize=512)
def _joe_coeffs(k: int, theta: float) -> np.ndarray:
    return special.joe_poly_coeffs(k, theta)


def _log_psi(spec, s):
    fam, th = spec.family, spec.theta
    if fam is Family.INDEPENDENCE:
        return -s
    if fam is Family.CLAYTON:
        return -np.log1p(s) / th
    if fam is Family.GUMBEL:
        return -(s ** (1.0 / th))
    if fam is Family.AMH:
        return math.log1p(-th) - s - np.log1p(-th * np.exp(-s))
    with np.errstate(divide="ignore"):
        return np.log(phi_inv(spec, s))


def log_abs_dpsi(spec: CopulaSpec, k: int, s):
    """``log |d^k/ds^k phi^{-1}(s)|`` for ``k >= 0``.

    Frank and AMH use the rational polylog form in ``w = z/(1 - z)``;
    Gumbel and Joe use their cached derivative polynomials.
    """
    if k < 0:
        raise DomainError(f"derivative order must be >= 0, got {k}")
    s = np.asarray(s, dtype=float)
    if np.any(~(s >= 0.0)):
        raise DomainError("derivatives of phi^{-1} need s >= 0")
    if k == 0:
        return _out(_log_psi(spec, s))
    fam, th = spec.family, spec.theta
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if fam is Family.INDEPENDENCE:
            out = -s
        elif fam is Family.CLAYTON:
            alpha = 1.0 / th
            out = (math.lgamma(k + alpha) - math.lgamma(alpha)) - (k + alpha) * np.log1p(s)
        elif fam is Family.FRANK:
            c = -math.expm1(-th)
            x = c * np.exp(-s)
            one_minus_x = np.where(x > 0.5, -np.expm1(-s) + np.exp(-th - s), 1.0 - x)
            logw = math.log(c) - s - np.log(one_minus_x)
            coeffs = special.polylog_coefficients(k - 1)
            out = -math.log(th) + logw + _log_poly(coeffs, logw)
        elif fam is Family.GUMBEL:
            alpha = 1.0 / th
            logs = np.log(s)
            logx = alpha * logs
            coeffs = _gumbel_coeffs(k, th)
            if np.all(coeffs >= 0):
                logp = _log_poly(coeffs, logx, first_power=1)
            else:
                x = np.exp(logx)
                p = np.polynomial.polynomial.polyval(x, np.concatenate([[0.0], coeffs]))
                logp = np.where(p > 0, np.log(np.abs(p)), np.nan)
            out = -np.exp(logx) - k * logs + logp
        elif fam is Family.JOE:
            alpha = 1.0 / th
            l1m = _log1mexp(s)
            logx = -s - l1m
            out = math.log(alpha) - s + (alpha - 1.0) * l1m + _log_poly(_joe_coeffs(k, th), logx)
        else:
            es = np.exp(-s)
            logw = np.log(th) - s - np.log1p(-th * es) if th > 0 else np.full_like(s, -np.inf)
            coeffs = special.polylog_coefficients(k)
            out = _log_psi(spec, s) + _log_poly(coeffs, logw)
    return _out(out)


def _signed_dpsi(spec, k, s):
    logabs = np.asarray(log_abs_dpsi(spec, k, s))
    finite_s = np.isfinite(np.asarray(s, dtype=float))
    if np.any(np.isnan(logabs)) or np.any(np.isposinf(logabs) & finite_s):
        raise CopulaOverflowError(
            f"derivative of order {k} of phi^-1 not representable for {spec}"
        )
    sign = -1.0 if k % 2 else 1.0
    return sign * np.exp(logabs)


def f_aux(spec: CopulaSpec, i: int, t):
    """Auxiliary function ``f_i(t) = psi^{(i+1)}(phi(t))``; sign ``(-1)^(i+1)``."""
    if not 0 <= i <= spec.dim - 1:
        raise DomainError(f"f_aux index i={i} outside 0..{spec.dim - 1}")
    t = _as_open_unit(t)
    return _out(_signed_dpsi(spec, i + 1, phi(spec, t)))


def f_aux_mc(spec: CopulaSpec, i: int, s, m: int, seed=None, return_stderr: bool = False):
    """Monte-Carlo estimate of ``psi^{(i+1)}(s)`` from ``m`` frailty draws.

    Uses ``psi^{(k)}(s) = (-1)^k E[V^k exp(-V s)]`` where ``V`` has Laplace
    transform ``psi``.  The argument lives in the transform domain.
    """
    from .sampling import sample_frailty

    if i < 0:
        raise DomainError(f"f_aux_mc index must be >= 0, got {i}")
    if m < 1:
        raise DomainError(f"need at least one frailty draw, got m={m}")
    s = float(s)
    if not s > 0:
        raise DomainError(f"f_aux_mc needs s > 0, got {s}")
    v = sample_frailty(spec, seed=seed, size=m).astype(float)
    terms = np.exp((i + 1) * np.log(v) - v * s)
    sign = 1.0 if (i + 1) % 2 == 0 else -1.0
    value = sign * float(np.mean(terms))
    if return_stderr:
        se = float(np.std(terms, ddof=1) / math.sqrt(m)) if m > 1 else math.inf
        return value, se
    return value


# ------------------------------------------------------- association measures


def _frank_tau(theta: float) -> float:
    if theta < 1e-2:
        return theta / 9.0 - theta**3 / 900.0 + theta**5 / 52920.0
    return 1.0 + 4.0 * (special.debye1(theta) - 1.0) / theta


def _joe_tau(theta: float) -> float:
    if theta == 1.0:
        return 0.0
    total = 0.0
    k0 = 1
    block = 4096
    while True:
        k = np.arange(k0, k0 + block, dtype=float)
        terms = 1.0 / (k * (theta * k + 2.0) * (theta * (k - 1.0) + 2.0))
        small = np.nonzero(terms < 1e-14)[0]
        if small.size:
            stop = small[0]
            total += math.fsum(terms[:stop])
            kk = k0 + stop
            # integral estimate of the truncated tail sum_{k >= kk}
            total += 1.0 / (2.0 * theta**2 * (kk - 0.5) ** 2)
            break
        total += math.fsum(terms)
        k0 += block
    return 1.0 - 4.0 * total


def _amh_tau(theta: float) -> float:
    if theta == 0.0:
        return 0.0
    if theta < 0.1:
        m = np.arange(1, 40, dtype=float)
        return float(np.sum((4.0 / 3.0) * theta**m / (m * (m + 1.0) * (m + 2.0))))
    return 1.0 - 2.0 * (theta + (1.0 - theta) ** 2 * math.log1p(-theta)) / (3.0 * theta**2)


def kendall_tau(spec: CopulaSpec) -> float:
    """Kendall's tau from the dependence parameter."""
    fam, th = spec.family, spec.theta
    if fam is Family.INDEPENDENCE:
        return 0.0
    if fam is Family.CLAYTON:
        return th / (th + 2.0)
    if fam is Family.GUMBEL:
        return (th - 1.0) / th
    if fam is Family.FRANK:
        return _frank_tau(th)
    if fam is Family.JOE:
        return _joe_tau(th)
    return _amh_tau(th)


_TAU_RANGE = {
    Family.CLAYTON: (0.0, 1.0, False),
    Family.FRANK: (0.0, 1.0, False),
    Family.GUMBEL: (0.0, 1.0, True),
    Family.JOE: (0.0, 1.0, True),
    Family.AMH: (0.0, 1.0 / 3.0, True),
}


def tau_range(family) -> tuple[float, float, bool]:
    return _TAU_RANGE[Family.parse(family)]


def tau_inverse(family, tau: float) -> float:
    """Dependence parameter whose Kendall's tau equals ``tau``."""
    fam = Family.parse(family)
    if fam is Family.INDEPENDENCE:
        raise UnattainableTauError("the independence copula has no parameter to invert")
    lo, hi, closed = _TAU_RANGE[fam]
    tau = float(tau)
    ok = tau < hi and (tau >= lo if closed else tau > lo)
    if not ok:
        bracket = "[" if closed else "("
        raise UnattainableTauError(
            f"tau={tau!r} not attainable by {fam.value}; attainable interval {bracket}{lo:g}, {hi:g})"
        )
    if fam is Family.CLAYTON:
        return 2.0 * tau / (1.0 - tau)
    if fam is Family.GUMBEL:
        return 1.0 / (1.0 - tau)
    if tau == 0.0:
        return 1.0 if fam is Family.JOE else 0.0

    def gap(th):
        return kendall_tau(CopulaSpec(fam, th)) - tau

    if fam is Family.AMH:
        a, b = 0.0, math.nextafter(1.0, 0.0)
    elif fam is Family.FRANK:
        if tau < 1e-12:
            return 9.0 * tau
        a, b = 1e-12, 10.0
        while gap(b) < 0:
            a, b = b, 2.0 * b
    else:
        a, b = 1.0, 2.0
        while gap(b) < 0:
            a, b = b, 2.0 * b
    return float(brentq(gap, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))


def tail_dependence(spec: CopulaSpec) -> TailCoefficients:
    """Pairwise lower and upper tail-dependence coefficients."""
    fam, th = spec.family, spec.theta
    if fam is Family.CLAYTON:
        return TailCoefficients(2.0 ** (-1.0 / th), 0.0)
    if fam in (Family.GUMBEL, Family.JOE):
        return TailCoefficients(0.0, 2.0 - 2.0 ** (1.0 / th))
    return TailCoefficients(0.0, 0.0)


# ------------------------------------------------------------ CDF and density


def _check_points(spec, u):
    u = np.asarray(u, dtype=float)
    if u.ndim == 0 or u.shape[-1] != spec.dim:
        raise DomainError(
            f"expected points of dimension {spec.dim}, got shape {u.shape}"
        )
    return u


def copula_cdf(spec: CopulaSpec, u):
    """``C(u) = psi(sum_i phi(u_i))`` on ``[0, 1]^d``; rows of ``u`` on the last axis."""
    u = _check_points(spec, u)
    if np.any((u < 0.0) | (u > 1.0) | np.isnan(u)):
        raise DomainError("copula arguments must lie in [0, 1]")
    zero = np.any(u == 0.0, axis=-1)
    safe = np.where(u == 0.0, 1.0, u)
    s = np.sum(phi(spec, safe), axis=-1)
    out = np.where(zero, 0.0, phi_inv(spec, s))
    return _out(out)


def copula_logpdf(spec: CopulaSpec, u, check: bool = True):
    """Log density ``log psi^{(d)}(sum phi(u_i)) + sum log|phi'(u_i)|``."""
    u = _check_points(spec, u)
    if np.any(~((u > 0.0) & (u < 1.0))):
        raise DomainError("copula density is defined on the open cube (0, 1)^d")
    s = np.sum(phi(spec, u), axis=-1)
    out = np.asarray(log_abs_dpsi(spec, spec.dim, s)) + np.sum(log_abs_phi_prime(spec, u), axis=-1)
    if check and not np.all(np.isfinite(out)):
        raise CopulaOverflowError(f"copula density not representable for {spec} at some points")
    return _out(out)


def copula_density(spec: CopulaSpec, u):
    return _out(np.exp(copula_logpdf(spec, u)))
