"""Kendall distribution function, its density, and the CCVaR weight factor."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import CopulaOverflowError, DomainError, OrderingError
from .quadrature import integrate
from .generators import (
    CopulaSpec,
    _out,
    f_aux_mc,
    log_abs_dpsi,
    log_abs_phi_prime,
    phi,
)

__all__ = ["kendall_cdf", "kendall_survival", "kendall_pdf", "h_factor", "tail_weight", "T_MAX"]

# K(t) is evaluated with t clamped below this value
T_MAX = 1.0 - 1e-12


def _unit(t):
    t = np.asarray(t, dtype=float)
    if np.any(~((t > 0.0) & (t < 1.0))):
        raise DomainError("t must lie in (0, 1)")
    return np.minimum(t, T_MAX)


def _log_abs_f(spec, i, s, mc_samples, seed):
    """``log|f_i|`` at transform point ``s``; Monte-Carlo if the closed form breaks."""
    try:
        out = np.asarray(log_abs_dpsi(spec, i + 1, s), dtype=float)
        if np.all(np.isfinite(out) | np.isneginf(out)):
            return out
    except (FloatingPointError, OverflowError):
        pass
    if not mc_samples:
        raise CopulaOverflowError(f"f_{i} not representable for {spec}")
    flat = np.atleast_1d(s).astype(float)
    vals = [abs(f_aux_mc(spec, i, si, mc_samples, seed=seed)) for si in flat]
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(vals)).reshape(np.shape(s))


def kendall_cdf(spec: CopulaSpec, t, mc_samples: int = 100_000, seed=12345):
    """``K(t) = t + sum_{i=1}^{d-1} phi(t)^i / i! * |f_{i-1}(t)|``.

    Every correction term is non-negative because ``f_{i-1}`` carries the
    sign ``(-1)^i``, so the sum is formed from logs without cancellation.
    """
    t = _unit(t)
    d = spec.dim
    s = np.asarray(phi(spec, t))
    with np.errstate(divide="ignore"):
        logs = np.log(s)
    terms = [t]
    for i in range(1, d):
        logf = _log_abs_f(spec, i - 1, s, mc_samples, seed)
        terms.append(np.exp(i * logs - math.lgamma(i + 1) + logf))
    k = np.sum(np.stack(terms), axis=0)
    return _out(np.clip(k, t, 1.0))


def _remainder(spec, lo, hi, power):
    """``int_lo^hi |psi^{(d)}(x)| (x - lo)^power / power! dx``, a Taylor remainder with no cancellation."""
    if hi <= lo:
        return 0.0
    d = spec.dim

    def f(x):
        with np.errstate(divide="ignore"):
            logp = power * np.log(x - lo) if power else 0.0
        return np.exp(_log_abs_f(spec, d - 1, x, 100_000, 12345) + logp - math.lgamma(power + 1))

    return integrate(f, lo, hi, abs_tol=0.0, rel_tol=1e-12, max_subdivisions=500,
                     raise_on_failure=False).value


_GL = {n: np.polynomial.legendre.leggauss(n) for n in (24, 48)}


def _remainder_many(spec, lo, hi, power):
    """Vectorized ``_remainder`` over an array of lower limits.

    Substituting ``x = lo + (hi - lo) y`` gives a smooth integrand on
    ``[0, 1]`` for most generators; two Gauss-Legendre orders are compared
    and points where they disagree fall back to adaptive quadrature.
    """
    lo = np.asarray(lo, dtype=float)
    delta = np.maximum(hi - lo, 0.0)
    d = spec.dim
    est = []
    for n in (24, 48):
        y, w = _GL[n]
        y, w = 0.5 * (y + 1.0), 0.5 * w
        x = lo[:, None] + delta[:, None] * y[None, :]
        logf = np.asarray(_log_abs_f(spec, d - 1, x, 100_000, 12345), dtype=float)
        est.append(np.exp(logf + power * np.log(y)[None, :]) @ w)
    with np.errstate(divide="ignore"):
        scale = np.exp((power + 1) * np.log(delta) - math.lgamma(power + 1))
    coarse, fine = est[0] * scale, est[1] * scale
    out = np.where(delta > 0, fine, 0.0)
    bad = (delta > 0) & ~(np.abs(coarse - fine) <= 1e-12 * np.abs(fine))
    for j in np.flatnonzero(bad):
        out[j] = _remainder(spec, float(lo[j]), hi, power)
    return out


def kendall_survival(spec: CopulaSpec, t, exact: bool | None = None):
    """``1 - K(t)``.

    Far in the upper tail the subtraction ``1 - K`` keeps only a few digits,
    so below ``1e-6`` it is recomputed as the Taylor remainder
    ``int_0^{phi(t)} |psi^{(d)}(x)| x^{d-1}/(d-1)! dx``.  ``exact`` forces
    one route or the other.
    """
    t = _unit(t)
    direct = 1.0 - np.asarray(kendall_cdf(spec, t), dtype=float)
    use = direct < 1e-6 if exact is None else np.full(direct.shape, bool(exact))
    if np.any(use):
        direct = np.array(direct, dtype=float, copy=True)
        flat, mask = direct.reshape(-1), use.reshape(-1)
        tt = np.broadcast_to(t, direct.shape).reshape(-1)
        for j in np.flatnonzero(mask):
            flat[j] = _remainder(spec, 0.0, float(phi(spec, tt[j])), spec.dim - 1)
    return _out(direct)


def kendall_pdf(spec: CopulaSpec, t, mc_samples: int = 100_000, seed=12345):
    """Density ``k(t) = phi(t)^{d-1}/(d-1)! |phi'(t)| |f_{d-1}(t)|``."""
    t = _unit(t)
    d = spec.dim
    s = np.asarray(phi(spec, t))
    with np.errstate(divide="ignore"):
        logs = np.log(s)
    logf = _log_abs_f(spec, d - 1, s, mc_samples, seed)
    out = np.exp((d - 1) * logs - math.lgamma(d) + log_abs_phi_prime(spec, t) + logf)
    return _out(out)


def _log_taylor_mass(spec, t, beta):
    """``log B`` with ``B = sum_{i=0}^{d-2} |f_i(beta)|/i! (phi(beta) - phi(t))^i``."""
    d = spec.dim
    sb = float(phi(spec, beta))
    delta = sb - np.asarray(phi(spec, t), dtype=float)
    with np.errstate(divide="ignore"):
        logdelta = np.log(np.maximum(delta, 0.0))
    terms = []
    for i in range(0, d - 1):
        logf = float(_log_abs_f(spec, i, sb, 100_000, 12345))
        if i == 0:
            terms.append(np.full_like(logdelta, logf))
        else:
            terms.append(logf - math.lgamma(i + 1) + i * logdelta)
    return logsumexp(np.stack(terms), axis=0)


def h_factor(spec: CopulaSpec, t, beta: float):
    """``h_{d-1}(t, beta) = f_0(t) - f_0(beta) - sum_{i=1}^{d-2} f_i(beta)/i! [phi(t)-phi(beta)]^i``."""
    beta = float(beta)
    t = np.asarray(t, dtype=float)
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    if np.any(t <= beta):
        raise OrderingError("h_factor needs beta < t")
    t = _unit(t)
    # f_0(beta) + sum(...) = -B, and f_0(t) = -1/|phi'(t)|
    out = np.exp(_log_taylor_mass(spec, t, beta)) - np.exp(-np.asarray(log_abs_phi_prime(spec, t)))
    return _out(out)


def tail_weight(spec: CopulaSpec, t, beta: float, exact: bool = False):
    """``phi'(t) h_{d-1}(t, beta)`` on ``[beta, 1)``, written as ``1 - |phi'(t)| B``.

    This is the sub-probability density of the conditioning set; it avoids
    the ``1/phi'(t)`` blow-up of ``f_0`` near ``t = 1``.  ``beta = 0`` gives
    the unconditional weight 1.  With ``exact=True`` the weight is the
    Taylor remainder of ``|psi'|`` divided by ``|psi'(phi(t))|``, which keeps
    full relative accuracy where ``1 - |phi'| B`` cancels (slow: one inner
    quadrature per point).
    """
    beta = float(beta)
    t = np.asarray(t, dtype=float)
    if beta == 0.0:
        return _out(np.ones_like(t))
    t = np.clip(t, beta, T_MAX)
    if exact:
        sb = float(phi(spec, beta))
        flat = np.atleast_1d(t).astype(float).ravel()
        st = np.asarray(phi(spec, flat), dtype=float)
        rem = _remainder_many(spec, st, sb, spec.dim - 2)
        out = rem * np.exp(np.asarray(log_abs_phi_prime(spec, flat)))
        return _out(out.reshape(np.shape(t)))
    logmass = _log_taylor_mass(spec, t, beta) + np.asarray(log_abs_phi_prime(spec, t))
    return _out(-np.expm1(logmass))
