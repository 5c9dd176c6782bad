"""Marshall-Olkin frailty sampling of Archimedean copulas and Monte-Carlo VaR/CVaR.

A row is ``U_j = psi(E_j / V)`` with iid unit exponentials ``E_j`` and one
frailty ``V`` whose Laplace-Stieltjes transform is ``psi``:

    Clayton      Gamma(1/theta)
    Frank        logarithmic series, p = 1 - exp(-theta)
    Gumbel       positive stable with index 1/theta (Kanter's representation)
    Joe          Sibuya(1/theta)
    AMH          geometric on {1, 2, ...}, success probability 1 - theta
    independence point mass at 1
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln

from .errors import DomainError, EmptyExceedanceError
from .generators import CopulaSpec, Family, _log1mexp, phi_inv
from .portfolio import PortfolioSpec

__all__ = [
    "UniformPanel",
    "sample_frailty",
    "sample_copula",
    "portfolio_var_cvar",
    "empirical_var_cvar",
    "BLOCK_ROWS",
]

# rows per independent random stream; fixed so results do not depend on threading
BLOCK_ROWS = 1 << 16

_TINY = np.finfo(float).tiny
_ONE_MINUS = 1.0 - np.finfo(float).epsneg


@dataclass(frozen=True)
class UniformPanel:
    """An ``n x d`` matrix of points strictly inside the unit cube."""

    data: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.data, dtype=float)
        if x.ndim != 2:
            raise DomainError(f"panel must be two-dimensional, got shape {x.shape}")
        if np.any(~((x > 0.0) & (x < 1.0))):
            raise DomainError("panel entries must lie strictly inside (0, 1)")
        object.__setattr__(self, "data", x)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def to_csv(self, path) -> None:
        header = ",".join(f"u{j + 1}" for j in range(self.dim))
        np.savetxt(path, self.data, delimiter=",", header=header, comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "UniformPanel":
        return cls(np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _positive_stable(rng, alpha, size):
    """Kanter's representation of the stable law with transform ``exp(-s^alpha)``."""
    if alpha == 1.0:
        return np.ones(size)
    u = rng.uniform(0.0, math.pi, size)
    w = rng.standard_exponential(size)
    log_a = (
        (alpha / (1.0 - alpha)) * np.log(np.sin(alpha * u))
        + np.log(np.sin((1.0 - alpha) * u))
        - np.log(np.sin(u)) / (1.0 - alpha)
    )
    return np.exp((1.0 - alpha) / alpha * (log_a - np.log(w)))


def _sibuya(rng, alpha, size):
    """Sibuya(alpha) by approximate inversion with an exact one-step correction."""
    u = rng.uniform(size=size)
    v = np.ones(size)
    if alpha >= 1.0:
        return v
    tail = u > alpha
    ut = u[tail]
    ginv = np.exp(-(np.log1p(-ut) + math.lgamma(1.0 - alpha)) / alpha)
    fl = np.floor(ginv)
    out = fl.copy()
    finite = ginv <= 2.0**52
    with np.errstate(over="ignore"):
        # P(V > n) = 1 / (n B(n, 1 - alpha))
        surv = np.exp(-(np.log(fl[finite]) + betaln(fl[finite], 1.0 - alpha)))
    out[finite] = np.where(1.0 - ut[finite] < surv, np.ceil(ginv[finite]), fl[finite])
    v[tail] = out
    return v


def _log_series(rng, theta, size):
    """Kemp's LK algorithm with ``p = 1 - exp(-theta)``, written in ``theta``."""
    p = -math.expm1(-theta)
    out = np.empty(size)
    todo = np.arange(size)
    while todo.size:
        v = rng.uniform(size=todo.size)
        u = rng.uniform(size=todo.size)
        q = -np.expm1(-theta * u)
        log_q = _log1mexp(theta * u)
        res = np.where(v >= p, 1.0, np.where(v >= q, 1.0, 2.0))
        deep = (v < p) & (np.log(v) <= 2.0 * log_q)
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.floor(1.0 + np.log(v) / log_q)
        res = np.where(deep, k, res)
        good = np.isfinite(res) & (res >= 1.0)
        out[todo[good]] = res[good]
        todo = todo[~good]
    return out


def sample_frailty(spec: CopulaSpec, seed=None, size=None):
    """Draw frailties whose Laplace-Stieltjes transform is ``phi^{-1}``."""
    rng = _rng(seed)
    n = 1 if size is None else int(size)
    fam, th = spec.family, spec.theta
    if fam is Family.INDEPENDENCE:
        v = np.ones(n)
    elif fam is Family.CLAYTON:
        v = rng.gamma(1.0 / th, 1.0, n)
    elif fam is Family.FRANK:
        v = _log_series(rng, th, n)
    elif fam is Family.GUMBEL:
        v = _positive_stable(rng, 1.0 / th, n)
    elif fam is Family.JOE:
        v = _sibuya(rng, 1.0 / th, n)
    else:
        v = rng.geometric(1.0 - th, n).astype(float)
    return float(v[0]) if size is None else v


def _sample_block(spec, rows, seq):
    rng = np.random.default_rng(seq)
    v = sample_frailty(spec, seed=rng, size=rows)
    e = rng.standard_exponential((rows, spec.dim))
    u = np.asarray(phi_inv(spec, e / v[:, None]))
    return np.clip(u, _TINY, _ONE_MINUS)


def sample_copula(spec: CopulaSpec, n: int, seed=None, workers: int = 1) -> UniformPanel:
    """Draw ``n`` rows from the copula.

    Rows are produced in blocks of :data:`BLOCK_ROWS`, each from its own
    child stream of the seed, so the panel is identical for any ``workers``.
    """
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    nblocks = -(-n // BLOCK_ROWS)
    children = root.spawn(nblocks)
    sizes = [min(BLOCK_ROWS, n - b * BLOCK_ROWS) for b in range(nblocks)]
    if workers > 1 and nblocks > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _sample_block(spec, *a), zip(sizes, children)))
    else:
        parts = [_sample_block(spec, r, c) for r, c in zip(sizes, children)]
    return UniformPanel(np.concatenate(parts, axis=0))


def empirical_var_cvar(z, beta: float) -> tuple[float, float]:
    """Empirical ``inf{x : F_n(x) >= beta}`` and the mean of strict exceedances."""
    z = np.sort(np.asarray(z, dtype=float).ravel())
    n = z.size
    if not 0.0 <= beta < 1.0:
        raise DomainError(f"beta must lie in [0, 1), got {beta}")
    idx = max(int(math.ceil(n * beta)) - 1, 0)
    var = float(z[idx])
    tail = z[z > var]
    if tail.size == 0:
        raise EmptyExceedanceError(f"no sample exceeds VaR={var:g} at beta={beta}")
    return var, float(np.mean(tail))


def portfolio_var_cvar(panel: UniformPanel, port: PortfolioSpec, beta: float) -> tuple[float, float]:
    """VaR and CVaR of ``Z = sum_j w_j F_j^{-1}(U_j)`` over the panel rows."""
    data = panel.data if isinstance(panel, UniformPanel) else np.asarray(panel, dtype=float)
    return empirical_var_cvar(port.loss(data), beta)
