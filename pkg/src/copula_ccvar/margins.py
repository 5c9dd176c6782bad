"""AR(1)-GARCH(1,1) margins fitted by quasi maximum likelihood.

The model for one asset's (negated, percent) log-returns is

    x_t = a0 + a1 x_{t-1} + eps_t,   eps_t = sigma_t z_t,
    sigma_t^2 = c0 + c1 eps_{t-1}^2 + d1 sigma_{t-1}^2,

with standardized innovations ``z_t`` (zero mean, unit variance) drawn from a
Normal, Student-t or Fernandez-Steel skewed-t law.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import optimize
from scipy.interpolate import CubicHermiteSpline
from scipy.special import expit, gammaln, logit, ndtr, ndtri, stdtr, stdtrit
from statsmodels.tools.numdiff import approx_hess

from ._kernels import ar_garch_simulate, garch_variance
from .errors import DomainError, NonConvergenceError, ParameterError, StateError, StationarityError

__all__ = [
    "InnovationKind",
    "Innovation",
    "NormalInnovation",
    "StudentTInnovation",
    "SkewedTInnovation",
    "make_innovation",
    "ReturnSeries",
    "MarginModel",
    "arma_garch_filter",
    "log_likelihood",
    "fit_ar_garch",
    "simulate_garch",
    "standardized_residuals",
    "pit_transform",
    "quantile_forecast",
    "one_step_moments",
    "ForecastMargin",
    "with_state",
]

MIN_FIT_LENGTH = 250
# logit(p) range and spacing of the tabulated quantile used for Monte-Carlo losses
TABLE_LOGIT_RANGE = 20.0
TABLE_STEP = 0.02
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class InnovationKind(str, Enum):
    NORMAL = "normal"
    STUDENT_T = "student_t"
    SKEWED_T = "skewed_t"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {"norm": "normal", "gaussian": "normal", "t": "student_t", "std": "student_t",
                   "studentt": "student_t", "sstd": "skewed_t", "skewt": "skewed_t", "skew_t": "skewed_t"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise DomainError(f"unknown innovation {name!r}") from None

    def __str__(self) -> str:
        return self.value


# ------------------------------------------------------------------ innovations


class Innovation:
    """Standardized innovation law; subclasses are immutable."""

    kind: InnovationKind
    param_names: tuple = ()

    @property
    def params(self) -> tuple:
        return tuple(getattr(self, n) for n in self.param_names)

    def pdf(self, z):
        return np.exp(self.logpdf(z))

    def rvs(self, size, rng):
        return self.ppf(rng.random(size))

    def tabulated_ppf(self, p):
        """Fast quantile via a cubic Hermite table in ``logit(p)``.

        Relative error is below 1e-7; levels outside the table use ``ppf``.
        """
        p = np.asarray(p, dtype=float)
        x = logit(p)
        inside = np.abs(x) <= TABLE_LOGIT_RANGE
        out = _quantile_table(self)(np.where(inside, x, 0.0))
        if not inside.all():
            out = np.where(inside, out, self.ppf(np.where(inside, 0.5, p)))
        return out


@lru_cache(maxsize=64)
def _quantile_table(innovation: Innovation) -> CubicHermiteSpline:
    x = np.arange(-TABLE_LOGIT_RANGE, TABLE_LOGIT_RANGE + 0.5 * TABLE_STEP, TABLE_STEP)
    q = np.asarray(innovation.ppf(expit(x)), dtype=float)
    # dq/dx = p(1-p)/f(q)
    dq = np.exp(-np.logaddexp(0.0, x) - np.logaddexp(0.0, -x) - innovation.logpdf(q))
    return CubicHermiteSpline(x, q, dq)


@dataclass(frozen=True)
class NormalInnovation(Innovation):
    kind = InnovationKind.NORMAL
    param_names = ()

    def logpdf(self, z):
        z = np.asarray(z, dtype=float)
        return -0.5 * z * z - _LOG_SQRT_2PI

    def cdf(self, z):
        return ndtr(z)

    def ppf(self, p):
        return ndtri(p)

    def rvs(self, size, rng):
        return rng.standard_normal(size)


@dataclass(frozen=True)
class StudentTInnovation(Innovation):
    """Student-t rescaled to unit variance (requires ``nu > 2``)."""

    nu: float
    kind = InnovationKind.STUDENT_T
    param_names = ("nu",)

    def __post_init__(self):
        if not self.nu > 2.0:
            raise ParameterError(f"Student-t innovations need nu > 2, got {self.nu}")

    @property
    def _k(self):
        return math.sqrt(self.nu / (self.nu - 2.0))

    def logpdf(self, z):
        z = np.asarray(z, dtype=float)
        nu = self.nu
        const = gammaln(0.5 * (nu + 1)) - gammaln(0.5 * nu) - 0.5 * math.log(math.pi * (nu - 2.0))
        return const - 0.5 * (nu + 1) * np.log1p(z * z / (nu - 2.0))

    def cdf(self, z):
        return stdtr(self.nu, np.asarray(z, dtype=float) * self._k)

    def ppf(self, p):
        return stdtrit(self.nu, p) / self._k

    def rvs(self, size, rng):
        return rng.standard_t(self.nu, size) / self._k

    def abs_mean(self) -> float:
        nu = self.nu
        return 2.0 * math.sqrt(nu - 2.0) * math.exp(gammaln(0.5 * (nu + 1)) - gammaln(0.5 * nu)) / (
            math.sqrt(math.pi) * (nu - 1.0))


@dataclass(frozen=True)
class SkewedTInnovation(Innovation):
    """Fernandez-Steel skewed Student-t, shifted and scaled to mean 0, variance 1.

    ``xi > 1`` puts more mass on the right.  ``xi = 1`` is the symmetric
    standardized Student-t.
    """

    nu: float
    xi: float
    kind = InnovationKind.SKEWED_T
    param_names = ("nu", "xi")

    def __post_init__(self):
        if not self.nu > 2.0:
            raise ParameterError(f"skewed-t innovations need nu > 2, got {self.nu}")
        if not self.xi > 0.0:
            raise ParameterError(f"skewness parameter must be positive, got {self.xi}")

    @property
    def _base(self):
        return StudentTInnovation(self.nu)

    def _moments(self):
        m1 = self._base.abs_mean()
        xi = self.xi
        mu = m1 * (xi - 1.0 / xi)
        var = (1.0 - m1 * m1) * (xi * xi + 1.0 / (xi * xi)) + 2.0 * m1 * m1 - 1.0
        return mu, math.sqrt(var)

    def _raw_logpdf(self, y):
        xi = self.xi
        arg = np.where(y >= 0, y / xi, y * xi)
        return math.log(2.0 / (xi + 1.0 / xi)) + self._base.logpdf(arg)

    def _raw_cdf(self, y):
        xi = self.xi
        g = self._base.cdf
        lo = 2.0 / (xi * xi + 1.0) * g(np.minimum(y, 0.0) * xi)
        hi = 1.0 / (1.0 + xi * xi) + 2.0 * xi * xi / (1.0 + xi * xi) * (g(np.maximum(y, 0.0) / xi) - 0.5)
        return np.where(y < 0, lo, hi)

    def _raw_ppf(self, p):
        xi = self.xi
        ginv = self._base.ppf
        split = 1.0 / (1.0 + xi * xi)
        p = np.asarray(p, dtype=float)
        lo = ginv(np.minimum(p, split) * (1.0 + xi * xi) / 2.0) / xi
        hi = xi * ginv(0.5 + (np.maximum(p, split) - split) * (1.0 + xi * xi) / (2.0 * xi * xi))
        return np.where(p < split, lo, hi)

    def logpdf(self, z):
        mu, sd = self._moments()
        return math.log(sd) + self._raw_logpdf(mu + sd * np.asarray(z, dtype=float))

    def cdf(self, z):
        mu, sd = self._moments()
        return self._raw_cdf(mu + sd * np.asarray(z, dtype=float))

    def ppf(self, p):
        mu, sd = self._moments()
        return (self._raw_ppf(p) - mu) / sd

    def rvs(self, size, rng):
        mu, sd = self._moments()
        g = np.abs(self._base.rvs(size, rng))
        pos = rng.random(size) < self.xi ** 2 / (1.0 + self.xi ** 2)
        y = np.where(pos, g * self.xi, -g / self.xi)
        return (y - mu) / sd


def make_innovation(kind, *params) -> Innovation:
    kind = InnovationKind.parse(kind)
    params = tuple(float(v) for v in params)
    if kind is InnovationKind.NORMAL:
        return NormalInnovation()
    if kind is InnovationKind.STUDENT_T:
        return StudentTInnovation(*(params or (8.0,)))
    return SkewedTInnovation(*(params or (8.0, 1.0)))


# ------------------------------------------------------------------ data types


@dataclass(frozen=True)
class ReturnSeries:
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size < 2:
            raise DomainError("a return series needs at least two observations")
        if not np.all(np.isfinite(v)):
            raise DomainError("return series contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def _as_values(series):
    if isinstance(series, ReturnSeries):
        return series.values
    return ReturnSeries(series).values


@dataclass(frozen=True)
class MarginModel:
    a0: float
    a1: float
    c0: float
    c1: float
    d1: float
    innovation: Innovation = field(default_factory=NormalInnovation)
    last_state: tuple | None = None  # (x_T, eps_T, sigma2_T)
    stderr: dict = field(default_factory=dict, compare=False)
    loglik: float | None = None
    nobs: int | None = None

    def __post_init__(self):
        if not self.c0 > 0:
            raise ParameterError(f"c0 must be positive, got {self.c0}")
        if self.c1 < 0 or self.d1 < 0:
            raise ParameterError("GARCH coefficients c1, d1 must be non-negative")
        if not self.c1 + self.d1 < 1:
            raise StationarityError(f"c1 + d1 = {self.c1 + self.d1} >= 1")
        if not abs(self.a1) < 1:
            raise ParameterError(f"AR coefficient must satisfy |a1| < 1, got {self.a1}")

    @property
    def n_params(self) -> int:
        return 5 + len(self.innovation.param_names)

    @property
    def aic(self) -> float | None:
        if self.loglik is None:
            return None
        return 2.0 * self.n_params - 2.0 * self.loglik

    @property
    def unconditional_variance(self) -> float:
        return self.c0 / (1.0 - self.c1 - self.d1)

    def param_dict(self) -> dict:
        out = {"a0": self.a0, "a1": self.a1, "c0": self.c0, "c1": self.c1, "d1": self.d1}
        out.update(zip(self.innovation.param_names, self.innovation.params))
        return out

    def to_kv(self, prefix="") -> str:
        """Flat ``key=value`` block; :meth:`from_kv` reads it back."""
        lines = [f"{prefix}innovation={self.innovation.kind.value}"]
        for k, v in self.param_dict().items():
            lines.append(f"{prefix}{k}={float(v)!r}")
        for k, v in self.stderr.items():
            lines.append(f"{prefix}se_{k}={float(v)!r}")
        if self.loglik is not None:
            lines.append(f"{prefix}loglik={float(self.loglik)!r}")
            lines.append(f"{prefix}aic={float(self.aic)!r}")
        if self.nobs is not None:
            lines.append(f"{prefix}nobs={self.nobs}")
        if self.last_state is not None:
            lines.append(f"{prefix}last_state=" + ",".join(repr(float(s)) for s in self.last_state))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_kv(cls, text, prefix=""):
        kv = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            k, v = line.split("=", 1)
            if k.startswith(prefix):
                kv[k[len(prefix):].strip()] = v.strip()
        kind = InnovationKind.parse(kv["innovation"])
        names = {InnovationKind.NORMAL: (), InnovationKind.STUDENT_T: ("nu",),
                 InnovationKind.SKEWED_T: ("nu", "xi")}[kind]
        innov = make_innovation(kind, *(float(kv[n]) for n in names))
        stderr = {k[3:]: float(v) for k, v in kv.items() if k.startswith("se_")}
        state = None
        if "last_state" in kv:
            state = tuple(float(s) for s in kv["last_state"].split(","))
        return cls(float(kv["a0"]), float(kv["a1"]), float(kv["c0"]), float(kv["c1"]), float(kv["d1"]),
                   innov, state, stderr, float(kv["loglik"]) if "loglik" in kv else None,
                   int(kv["nobs"]) if "nobs" in kv else None)


# ------------------------------------------------------------------ filtering


def arma_garch_filter(x, a0=0.0, ar=(), ma=(), c0=1.0, arch=(), garch=(), sigma2_0=None):
    """General ARMA(p,q)-GARCH(r,s) residual and variance recursion.

    Residuals before the first ``p`` observations are not formed; the
    returned arrays start at index ``p``.  Pre-sample residuals are zero and
    pre-sample variances equal ``sigma2_0`` (default: sample variance).
    This plain loop is the reference for the fast (1,1)-(1,1) path.
    """
    x = np.asarray(x, dtype=float)
    p, q, r, s = len(ar), len(ma), len(arch), len(garch)
    if sigma2_0 is None:
        sigma2_0 = float(np.var(x))
    n = x.size - p
    eps = np.zeros(n)
    sig2 = np.empty(n)
    for t in range(n):
        k = t + p
        m = a0 + sum(ar[i] * x[k - 1 - i] for i in range(p))
        m += sum(ma[j] * eps[t - 1 - j] for j in range(q) if t - 1 - j >= 0)
        eps[t] = x[k] - m
        if t == 0:
            sig2[t] = sigma2_0
            continue
        v = c0
        v += sum(arch[i] * eps[t - 1 - i] ** 2 for i in range(r) if t - 1 - i >= 0)
        v += sum(garch[j] * (sig2[t - 1 - j] if t - 1 - j >= 0 else sigma2_0) for j in range(s))
        sig2[t] = v
    return eps, sig2


def _filter(x, a0, a1, c0, c1, d1, sigma2_0):
    eps = x[1:] - a0 - a1 * x[:-1]
    sig2 = garch_variance(eps, c0, c1, d1, sigma2_0)
    return eps, sig2


def _loglik_terms(x, a0, a1, c0, c1, d1, innov, sigma2_0):
    eps, sig2 = _filter(x, a0, a1, c0, c1, d1, sigma2_0)
    if np.any(sig2 <= 0) or not np.all(np.isfinite(sig2)):
        return None
    z = eps / np.sqrt(sig2)
    return innov.logpdf(z) - 0.5 * np.log(sig2)


def log_likelihood(model: MarginModel, series) -> float:
    """Conditional log-likelihood of ``x[1:]`` given ``x[0]``."""
    x = _as_values(series)
    terms = _loglik_terms(x, model.a0, model.a1, model.c0, model.c1, model.d1, model.innovation, float(np.var(x)))
    return -math.inf if terms is None else float(np.sum(terms))


# ------------------------------------------------------------------ fitting

# Unconstrained coordinates: a0, atanh(a1), log c0, logit(c1+d1), logit(c1/(c1+d1)),
# then log(nu-2) and log(xi) as needed.


def _natural(u, kind):
    a0 = u[0]
    a1 = math.tanh(u[1])
    c0 = math.exp(u[2])
    pers = expit(u[3])
    share = expit(u[4])
    out = [a0, a1, c0, pers * share, pers * (1.0 - share)]
    if kind is not InnovationKind.NORMAL:
        out.append(2.0 + math.exp(u[5]))
    if kind is InnovationKind.SKEWED_T:
        out.append(math.exp(u[6]))
    return np.array(out)


def _unconstrained(p, kind):
    a0, a1, c0, c1, d1 = p[:5]
    pers = min(max(c1 + d1, 1e-6), 1 - 1e-9)
    share = min(max(c1 / (c1 + d1) if c1 + d1 > 0 else 0.5, 1e-6), 1 - 1e-6)
    out = [a0, math.atanh(max(min(a1, 0.999), -0.999)), math.log(c0), logit(pers), logit(share)]
    if kind is not InnovationKind.NORMAL:
        out.append(math.log(max(p[5] - 2.0, 1e-3)))
    if kind is InnovationKind.SKEWED_T:
        out.append(math.log(p[6]))
    return np.array(out)


def _innov_from(p, kind):
    return make_innovation(kind, *p[5:])


def _negll_natural(p, x, kind, sigma2_0):
    try:
        innov = _innov_from(p, kind)
    except ParameterError:
        return math.inf
    if p[2] <= 0:
        return math.inf
    terms = _loglik_terms(x, p[0], p[1], p[2], p[3], p[4], innov, sigma2_0)
    if terms is None:
        return math.inf
    val = -float(np.sum(terms))
    return val if math.isfinite(val) else math.inf


def _start(x, kind):
    xc = x - x.mean()
    denom = float(np.dot(xc, xc))
    a1 = float(np.dot(xc[1:], xc[:-1]) / denom) if denom > 0 else 0.0
    a1 = max(min(a1, 0.9), -0.9)
    a0 = float(x.mean() * (1.0 - a1))
    var = float(np.var(x)) * (1.0 - a1 * a1)
    p = [a0, a1, max(var * 0.05, 1e-8), 0.05, 0.90]
    if kind is not InnovationKind.NORMAL:
        p.append(8.0)
    if kind is InnovationKind.SKEWED_T:
        p.append(1.0)
    return np.array(p)


def fit_ar_garch(series, innovation="normal", start: MarginModel | None = None, polish=True,
                 compute_stderr=True) -> MarginModel:
    """Quasi maximum likelihood fit of an AR(1)-GARCH(1,1) margin.

    ``start`` warm-starts the optimizer from an earlier fit (rolling windows).
    The variance recursion starts at the sample variance of the series.
    """
    x = _as_values(series)
    if x.size < MIN_FIT_LENGTH:
        raise DomainError(f"need at least {MIN_FIT_LENGTH} observations to fit, got {x.size}")
    kind = InnovationKind.parse(innovation)
    sigma2_0 = float(np.var(x))
    if sigma2_0 <= 0:
        raise DomainError("series has zero variance")

    if start is not None and start.innovation.kind is kind:
        p0 = np.array(list(start.param_dict().values()))
    else:
        p0 = _start(x, kind)
    u0 = _unconstrained(p0, kind)
    # scale so the objective is O(1) per observation
    scale = 1.0 / (x.size - 1)

    def obj(u):
        try:
            p = _natural(u, kind)
        except (OverflowError, ValueError):
            return 1e10
        v = _negll_natural(p, x, kind, sigma2_0)
        return v * scale if math.isfinite(v) else 1e10

    f0 = obj(u0)
    best_u, best_f = u0, f0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = optimize.minimize(obj, u0, method="L-BFGS-B", options={"maxiter": 500})
        if res.fun < best_f:
            best_u, best_f = res.x, res.fun
        if polish:
            res2 = optimize.minimize(obj, best_u, method="Nelder-Mead",
                                     options={"maxiter": 400 * len(u0), "xatol": 1e-7, "fatol": 1e-10})
            if res2.fun < best_f:
                best_u, best_f = res2.x, res2.fun
    if not math.isfinite(best_f) or best_f >= 1e10:
        raise NonConvergenceError("GARCH likelihood could not be evaluated at any iterate",
                                  best=_natural(u0, kind))
    if expit(best_u[3]) >= 1.0 - 1e-8:
        raise StationarityError("persistence c1 + d1 reached the non-stationary boundary")

    p = _natural(best_u, kind)
    innov = _innov_from(p, kind)
    ll = -best_f / scale
    names = ["a0", "a1", "c0", "c1", "d1", *innov.param_names]
    stderr = {}
    if compute_stderr:
        stderr = dict(zip(names, _hessian_stderr(p, x, kind, sigma2_0)))

    eps, sig2 = _filter(x, p[0], p[1], p[2], p[3], p[4], sigma2_0)
    last = (float(x[-1]), float(eps[-1]), float(sig2[-1]))
    return MarginModel(float(p[0]), float(p[1]), float(p[2]), float(p[3]), float(p[4]), innov,
                       last, stderr, float(ll), int(x.size))


def _hessian_stderr(p, x, kind, sigma2_0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        h = approx_hess(p, lambda q: _negll_natural(q, x, kind, sigma2_0))
    se = np.full(p.size, np.nan)
    if not np.all(np.isfinite(h)):
        return se
    try:
        cov = np.linalg.inv(h)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(h)
    diag = np.diag(cov)
    ok = diag > 0
    se[ok] = np.sqrt(diag[ok])
    return se


# ------------------------------------------------------------------ simulation and transforms


def simulate_garch(model: MarginModel, n: int, seed=None, burn_in: int = 1000) -> ReturnSeries:
    """Simulate ``n`` observations after discarding ``burn_in`` warm-up steps."""
    if n < 2:
        raise DomainError("n must be at least 2")
    rng = np.random.default_rng(seed)
    z = np.asarray(model.innovation.rvs(n + burn_in, rng), dtype=float)
    x0 = model.a0 / (1.0 - model.a1)
    x, _ = ar_garch_simulate(z, model.a0, model.a1, model.c0, model.c1, model.d1,
                             x0, 0.0, model.unconditional_variance)
    return ReturnSeries(x[burn_in:])


def standardized_residuals(model: MarginModel, series) -> np.ndarray:
    x = series.values if isinstance(series, ReturnSeries) else np.asarray(series, dtype=float).ravel()
    if x.size < 2:
        raise StateError("residual recursion needs at least two observations")
    eps, sig2 = _filter(x, model.a0, model.a1, model.c0, model.c1, model.d1, float(np.var(x)))
    if np.any(sig2 <= 0):
        raise StateError("variance recursion produced non-positive values")
    return eps / np.sqrt(sig2)


def pit_transform(model: MarginModel, series) -> np.ndarray:
    """``u_t = F_z(z_t)`` for ``t = 1..T-1``, clipped into the open unit interval."""
    u = np.asarray(model.innovation.cdf(standardized_residuals(model, series)), dtype=float)
    tiny = np.finfo(float).tiny
    return np.clip(u, tiny, 1.0 - np.finfo(float).epsneg)


def one_step_moments(model: MarginModel):
    """Conditional mean and standard deviation of ``x_{T+1}``."""
    if model.last_state is None:
        raise StateError("model carries no filtering state; fit it or attach last_state")
    x_t, eps_t, sig2_t = model.last_state
    mean = model.a0 + model.a1 * x_t
    sig2 = model.c0 + model.c1 * eps_t * eps_t + model.d1 * sig2_t
    return mean, math.sqrt(sig2)


def quantile_forecast(model: MarginModel, p, tabulated: bool = False):
    """One-step-ahead loss quantile ``a0 + a1 x_T + sigma_{T+1} F_z^{-1}(p)``.

    ``tabulated=True`` uses the interpolated innovation quantile.
    """
    mean, sd = one_step_moments(model)
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("quantile level must lie in (0, 1)")
    inv = model.innovation.tabulated_ppf if tabulated else model.innovation.ppf
    out = mean + sd * np.asarray(inv(p), dtype=float)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ForecastMargin:
    """One-step-ahead predictive margin usable as a portfolio quantile provider."""

    model: MarginModel
    tabulated: bool = False

    def ppf(self, p):
        return quantile_forecast(self.model, np.clip(p, 1e-300, 1 - 1e-16), self.tabulated)

    def mean(self) -> float:
        return one_step_moments(self.model)[0]


def with_state(model: MarginModel, series) -> MarginModel:
    """Copy of ``model`` whose filtering state is taken from the end of ``series``."""
    x = _as_values(series)
    eps, sig2 = _filter(x, model.a0, model.a1, model.c0, model.c1, model.d1, float(np.var(x)))
    return replace(model, last_state=(float(x[-1]), float(eps[-1]), float(sig2[-1])))
