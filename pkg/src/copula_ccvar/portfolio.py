"""Portfolio weights and marginal loss-quantile providers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
from scipy import stats

from .errors import DomainError, ParameterError

__all__ = [
    "QuantileProvider",
    "UniformMargin",
    "DistributionMargin",
    "EmpiricalMargin",
    "AffineMargin",
    "PortfolioSpec",
]


class QuantileProvider(Protocol):
    def ppf(self, p): ...

    def mean(self) -> float: ...


@dataclass(frozen=True)
class UniformMargin:
    low: float = 0.0
    high: float = 1.0

    def ppf(self, p):
        return self.low + (self.high - self.low) * np.asarray(p, dtype=float)

    def mean(self) -> float:
        return 0.5 * (self.low + self.high)


@dataclass(frozen=True)
class DistributionMargin:
    """Wraps any frozen ``scipy.stats`` distribution."""

    dist: object

    def ppf(self, p):
        return self.dist.ppf(p)

    def mean(self) -> float:
        return float(self.dist.mean())

    @classmethod
    def normal(cls, loc=0.0, scale=1.0):
        return cls(stats.norm(loc, scale))

    @classmethod
    def student_t(cls, df, loc=0.0, scale=1.0):
        return cls(stats.t(df, loc, scale))

    @classmethod
    def exponential(cls, scale=1.0):
        return cls(stats.expon(scale=scale))


@dataclass(frozen=True)
class EmpiricalMargin:
    """Right-continuous inverse of the empirical CDF: ``inf{x : F_n(x) >= p}``."""

    sample: np.ndarray = field(repr=False)

    def __post_init__(self):
        x = np.sort(np.asarray(self.sample, dtype=float).ravel())
        if x.size == 0:
            raise ParameterError("empirical margin needs a non-empty sample")
        object.__setattr__(self, "sample", x)

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        n = self.sample.size
        idx = np.clip(np.ceil(n * p).astype(np.int64) - 1, 0, n - 1)
        return self.sample[idx]

    def mean(self) -> float:
        return float(np.mean(self.sample))


@dataclass(frozen=True)
class AffineMargin:
    """``shift + scale * X`` for a base provider ``X`` (``scale > 0``)."""

    base: object
    shift: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ParameterError("scale must be positive")

    def ppf(self, p):
        return self.shift + self.scale * np.asarray(self.base.ppf(p))

    def mean(self) -> float:
        return self.shift + self.scale * self.base.mean()


@dataclass(frozen=True)
class PortfolioSpec:
    """Convex weights and one loss-quantile provider per asset."""

    weights: tuple
    quantiles: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size != len(self.quantiles):
            raise ParameterError(
                f"{w.size} weights but {len(self.quantiles)} quantile providers"
            )
        if np.any(w < 0) or np.any(w > 1) or not math.isclose(w.sum(), 1.0, abs_tol=1e-9):
            raise ParameterError(f"weights must lie in [0, 1] and sum to 1, got {w.tolist()}")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))
        object.__setattr__(self, "quantiles", tuple(self.quantiles))

    @classmethod
    def equal(cls, quantiles: Sequence) -> "PortfolioSpec":
        d = len(quantiles)
        return cls(tuple([1.0 / d] * d), tuple(quantiles))

    @classmethod
    def uniform(cls, d: int, weights=None) -> "PortfolioSpec":
        margins = tuple(UniformMargin() for _ in range(d))
        if weights is None:
            return cls.equal(margins)
        return cls(tuple(weights), margins)

    @property
    def dim(self) -> int:
        return len(self.weights)

    def diagonal_loss(self, t):
        """``sum_i w_i F_i^{-1}(t)`` evaluated on the diagonal."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for w, q in zip(self.weights, self.quantiles):
            if w:
                out = out + w * np.asarray(q.ppf(t))
        return out

    def loss(self, u):
        """Portfolio loss ``sum_i w_i F_i^{-1}(u_i)`` for rows ``u`` of shape (n, d)."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.dim:
            raise DomainError(f"expected {self.dim} columns, got {u.shape[-1]}")
        out = np.zeros(u.shape[:-1])
        for j, (w, q) in enumerate(zip(self.weights, self.quantiles)):
            if w:
                out = out + w * np.asarray(q.ppf(u[..., j]))
        return out

    def expected_loss(self) -> float:
        return float(sum(w * q.mean() for w, q in zip(self.weights, self.quantiles)))

    def shifted(self, k: float) -> "PortfolioSpec":
        return PortfolioSpec(self.weights, tuple(AffineMargin(q, shift=k) for q in self.quantiles))

    def scaled(self, s: float) -> "PortfolioSpec":
        return PortfolioSpec(self.weights, tuple(AffineMargin(q, scale=s) for q in self.quantiles))
