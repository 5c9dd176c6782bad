"""Pipeline configuration: a flat ``key = value`` file plus command-line overrides."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import DomainError

__all__ = ["PipelineConfig", "load_config", "parse_config", "parse_float_list"]


def parse_float_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    return tuple(float(p) for p in parts)


def _parse_str_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(str(v) for v in text)
    return tuple(p.strip() for p in str(text).split(",") if p.strip())


@dataclass(frozen=True)
class PipelineConfig:
    input: str | None = None
    assets: tuple = ()
    innovation: str = "student_t"
    family: str = "all"
    betas: tuple = (0.95, 0.99)
    weights: tuple = ()
    window: int = 1000
    mc_samples: int = 100_000
    abs_tol: float = 1e-9
    rel_tol: float = 1e-7
    gammas: tuple = (0.8, 0.9)
    seed: int = 0
    workers: int = 1
    out: str = "out"

    def __post_init__(self):
        if len(self.betas) == 0:
            raise DomainError("at least one beta is required")
        if any(not 0.0 <= b < 1.0 for b in self.betas):
            raise DomainError(f"betas must lie in [0, 1), got {self.betas}")
        if self.weights:
            if any(w < 0 or w > 1 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-9:
                raise DomainError(f"weights must lie in [0, 1] and sum to 1, got {self.weights}")
        if self.window < 2:
            raise DomainError("window must be at least 2")
        if self.mc_samples < 1:
            raise DomainError("mc_samples must be positive")

    def families(self) -> tuple:
        from .generators import ARCHIMEDEAN_FAMILIES, Family

        if self.family.strip().lower() == "all":
            return (Family.INDEPENDENCE, *ARCHIMEDEAN_FAMILIES)
        return tuple(Family.parse(f) for f in _parse_str_list(self.family))

    def innovations(self) -> tuple:
        from .margins import InnovationKind

        if self.innovation.strip().lower() == "all":
            return tuple(InnovationKind)
        return tuple(InnovationKind.parse(i) for i in _parse_str_list(self.innovation))

    def resolved_weights(self, d: int) -> tuple:
        if not self.weights:
            return (1.0 / d,) * d
        if len(self.weights) != d:
            raise DomainError(f"{len(self.weights)} weights given for {d} assets")
        return self.weights

    def with_overrides(self, **kw) -> "PipelineConfig":
        """Apply non-``None`` overrides, coercing strings like the file parser does."""
        clean = {k: _coerce(k, v) for k, v in kw.items() if v is not None}
        return replace(self, **clean)

    def to_kv(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name}={'' if v is None else v}")
        return "\n".join(lines) + "\n"


_KEYS = {f.name: f for f in fields(PipelineConfig)}
_ALIASES = {"beta": "betas", "gamma": "gammas", "mc": "mc_samples", "mc-samples": "mc_samples",
            "copula": "family", "margin": "innovation", "output": "out"}


def _coerce(key, value):
    default = _KEYS[key].default
    if key in ("betas", "weights", "gammas"):
        return parse_float_list(value)
    if key == "assets":
        return _parse_str_list(value)
    if isinstance(default, bool):
        return str(value).strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return None if value == "" else str(value)


def parse_config(text: str) -> PipelineConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key.lower(), key.lower().replace("-", "_"))
        if key not in _KEYS:
            raise DomainError(f"config line {lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, value)
        except ValueError as exc:
            raise DomainError(f"config line {lineno}: bad value for {key}: {exc}") from None
    return PipelineConfig(**values)


def load_config(path) -> PipelineConfig:
    return parse_config(Path(path).read_text())
