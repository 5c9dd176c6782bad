"""Copula parameter estimation and an upper-tail goodness-of-fit distance."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize, stats

from ._kernels import empirical_copula_counts
from .errors import (
    BoundaryWarning,
    CopulaOverflowError,
    DomainError,
    NonFiniteDensityError,
    ParameterError,
    UnattainableTauError,
)
from .generators import CopulaSpec, Family, copula_cdf, copula_logpdf, tau_inverse, tau_range, theta_range
from .sampling import UniformPanel

__all__ = [
    "FitMethod",
    "CopulaFit",
    "pseudo_observations",
    "average_kendall_tau",
    "copula_loglik",
    "fit_copula_mle",
    "tail_lattice",
    "empirical_copula",
    "gof_tail_distance",
]

BOUNDARY_TOL = 1e-6
_THETA_CAP = {Family.CLAYTON: 200.0, Family.FRANK: 300.0, Family.GUMBEL: 100.0, Family.JOE: 100.0}


class FitMethod(str, Enum):
    IFM = "IFM"
    PML = "PML"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CopulaFit:
    spec: CopulaSpec
    stderr: float
    loglik: float
    method: FitMethod = FitMethod.IFM
    start_theta: float | None = None
    start_loglik: float | None = None

    @property
    def theta(self) -> float:
        return self.spec.theta

    def to_kv(self, prefix="") -> str:
        return (f"{prefix}family={self.spec.family.value}\n{prefix}theta={float(self.theta)!r}\n"
                f"{prefix}dim={self.spec.dim}\n{prefix}se_theta={float(self.stderr)!r}\n"
                f"{prefix}loglik={float(self.loglik)!r}\n{prefix}method={self.method.value}\n")

    @classmethod
    def from_kv(cls, text, prefix=""):
        kv = {}
        for line in text.splitlines():
            if "=" in line and line.startswith(prefix):
                k, v = line[len(prefix):].split("=", 1)
                kv[k.strip()] = v.strip()
        spec = CopulaSpec(kv["family"], float(kv["theta"]), int(kv["dim"]))
        return cls(spec, float(kv["se_theta"]), float(kv["loglik"]), FitMethod(kv.get("method", "IFM")))


def pseudo_observations(data, min_rows: int = 50) -> UniformPanel:
    """Column-wise ``rank / (T + 1)`` with average ranks for ties.

    ``data`` is a ``T x d`` array or a sequence of ``d`` equally long series.
    """
    if isinstance(data, (list, tuple)):
        cols = [np.asarray(getattr(c, "values", c), dtype=float).ravel() for c in data]
        if len({c.size for c in cols}) > 1:
            raise DomainError(f"series lengths differ: {[c.size for c in cols]}")
        x = np.column_stack(cols)
    else:
        x = np.asarray(data, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
    if x.ndim != 2:
        raise DomainError(f"expected a T x d array, got shape {x.shape}")
    if x.shape[0] < min_rows:
        raise DomainError(f"need at least {min_rows} rows, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise DomainError("data contain non-finite values")
    ranks = stats.rankdata(x, method="average", axis=0)
    return UniformPanel(ranks / (x.shape[0] + 1.0))


def average_kendall_tau(panel: UniformPanel) -> float:
    u = panel.data
    taus = [stats.kendalltau(u[:, i], u[:, j])[0] for i, j in itertools.combinations(range(u.shape[1]), 2)]
    return float(np.mean(taus))


def copula_loglik(spec: CopulaSpec, panel: UniformPanel) -> float:
    """``sum_t log c(u_t)``; non-finite when some row hits a density singularity."""
    try:
        terms = np.asarray(copula_logpdf(spec, panel.data, check=False), dtype=float)
    except CopulaOverflowError:
        return -math.inf
    if not np.all(np.isfinite(terms)):
        return -math.inf
    # pairwise summation keeps the reduction order fixed
    return float(np.sum(terms))


def _bounds(fam):
    lo, hi, _ = theta_range(fam)
    if fam is Family.AMH:
        return 0.0, 1.0 - 1e-9
    return lo, min(hi, _THETA_CAP[fam])


# 1-D search happens on y with theta = lo + exp(y) (AMH: theta = y directly)


def _to_theta(fam, y):
    if fam is Family.AMH:
        return float(y)
    return _bounds(fam)[0] + math.exp(y)


def _to_y(fam, theta):
    if fam is Family.AMH:
        return float(theta)
    return math.log(theta - _bounds(fam)[0])


def _start_theta(fam, panel):
    tau = average_kendall_tau(panel)
    lo_tau, hi_tau, _ = tau_range(fam)
    tau = min(max(tau, lo_tau + 1e-3), hi_tau - 1e-3)
    try:
        theta = tau_inverse(fam, tau)
    except UnattainableTauError:
        theta = 1.0 if fam in (Family.GUMBEL, Family.JOE) else 0.5
    lo, hi = _bounds(fam)
    floor = lo + 1e-4 if fam is not Family.AMH else lo
    return min(max(theta, floor), hi * 0.999)


def _second_derivative(f, x, lo, hi):
    h = 1e-4 * max(1.0, abs(x))
    if x - h > lo and x + h < hi:
        return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    if x - h <= lo:
        return (f(x + 2 * h) - 2.0 * f(x + h) + f(x)) / (h * h)
    return (f(x) - 2.0 * f(x - h) + f(x - 2 * h)) / (h * h)


def fit_copula_mle(panel: UniformPanel, family, method=FitMethod.IFM) -> CopulaFit:
    """Maximum likelihood estimate of ``theta`` for a one-parameter family.

    The search is Brent's bounded method on a transformed parameter,
    centred at the Kendall-tau moment estimate and widened whenever the
    optimum lands on the edge of the current window.
    """
    fam = Family.parse(family)
    if fam is Family.INDEPENDENCE:
        raise DomainError("the independence copula has no parameter to fit")
    if not isinstance(panel, UniformPanel):
        panel = UniformPanel(panel)
    d = panel.dim
    if d < 2:
        raise DomainError("copula fitting needs at least two columns")
    lo, hi = _bounds(fam)

    def ll(theta):
        return copula_loglik(CopulaSpec(fam, theta, d), panel)

    def obj(y):
        v = ll(_to_theta(fam, y))
        return -v if math.isfinite(v) else 1e300

    theta0 = _start_theta(fam, panel)
    ll0 = ll(theta0)
    y_lo = _to_y(fam, lo) if fam is Family.AMH else math.log(1e-8)
    y_hi = _to_y(fam, hi)
    y0 = _to_y(fam, theta0)
    half = 0.3 if fam is Family.AMH else 2.0
    a, b = max(y_lo, y0 - half), min(y_hi, y0 + half)
    for _ in range(8):
        res = optimize.minimize_scalar(obj, bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-10, "maxiter": 500})
        y = float(res.x)
        width = b - a
        edge = 1e-3 * width
        if y - a < edge and a > y_lo:
            a, b = max(y_lo, a - 2 * width), y + edge
        elif b - y < edge and b < y_hi:
            a, b = y - edge, min(y_hi, b + 2 * width)
        else:
            break
    theta = _to_theta(fam, y)
    best = ll(theta)
    if not (math.isfinite(best) and best >= ll0) and math.isfinite(ll0):
        theta, best = theta0, ll0
    if not math.isfinite(best):
        raise NonFiniteDensityError(f"{fam.value} density is singular at some panel rows")

    if theta - lo < BOUNDARY_TOL or hi - theta < BOUNDARY_TOL:
        warnings.warn(f"{fam.value} estimate {theta:g} sits at the edge of the parameter range",
                      BoundaryWarning, stacklevel=2)
    curv = _second_derivative(ll, theta, lo, hi)
    stderr = 1.0 / math.sqrt(-curv) if curv < 0 else math.nan
    spec = CopulaSpec(fam, theta, d)
    return CopulaFit(spec, stderr, best, FitMethod(method), theta0, ll0)


def tail_lattice(d: int, gamma: float, points_per_axis: int = 5, max_points: int = 10_000, seed=0) -> np.ndarray:
    """Tensor lattice on ``[gamma, 1]^d``, subsampled without replacement when too large."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    axis = np.linspace(gamma, 1.0, points_per_axis)
    total = points_per_axis ** d
    if total <= max_points:
        grids = np.meshgrid(*([axis] * d), indexing="ij")
        return np.column_stack([g.ravel() for g in grids])
    rng = np.random.default_rng(seed)
    flat = np.sort(rng.choice(total, size=max_points, replace=False))
    idx = np.stack(np.unravel_index(flat, (points_per_axis,) * d), axis=1)
    return axis[idx]


def empirical_copula(panel: UniformPanel, w) -> np.ndarray:
    """``C_n(w) = (1/n) #{t : u_t <= w}`` at each row of ``w``."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    return empirical_copula_counts(panel.data, w) / panel.rows


def gof_tail_distance(panel: UniformPanel, fitted: CopulaSpec, gamma: float = 0.9, points_per_axis: int = 5,
                      max_points: int = 10_000) -> float:
    """Mean absolute gap between empirical and fitted copula on the upper tail ``[gamma, 1]^d``."""
    if panel.dim != fitted.dim:
        raise DomainError(f"panel has {panel.dim} columns, copula has dimension {fitted.dim}")
    w = tail_lattice(panel.dim, gamma, points_per_axis, max_points)
    return float(np.mean(np.abs(empirical_copula(panel, w) - np.asarray(copula_cdf(fitted, w)))))
