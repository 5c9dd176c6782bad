"""End-to-end risk pipeline: prices in, VaR / CVaR / CCVaR reports out.

Returns are negated percent log-returns, ``r_t = -100 log(P_t / P_{t-1})``,
so positive values are losses.  Margins are AR(1)-GARCH(1,1) fits, the
copula is fitted on their probability-integral transforms (IFM), and the
risk measures use the one-step-ahead predictive margins.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .ccvar import QuadConfig, ccvar_quadrature
from .config import PipelineConfig
from .errors import CopulaError, DomainError
from .fit import CopulaFit, FitMethod, fit_copula_mle, gof_tail_distance
from .generators import ARCHIMEDEAN_FAMILIES, CopulaSpec, Family, tau_inverse
from .margins import (
    ForecastMargin,
    InnovationKind,
    MarginModel,
    fit_ar_garch,
    make_innovation,
    pit_transform,
)
from .portfolio import PortfolioSpec
from .sampling import UniformPanel, empirical_var_cvar, sample_copula

__all__ = [
    "InputError",
    "PriceData",
    "ingest",
    "describe",
    "fit_margins",
    "fit_copulas",
    "RiskRow",
    "RiskReport",
    "risk_from_models",
    "risk_once",
    "BacktestRow",
    "backtest",
    "sweep_beta",
    "sweep_theta",
    "synthetic_prices",
    "write_prices",
    "emit",
    "RISK_COLUMNS",
    "BACKTEST_COLUMNS",
]

log = logging.getLogger(__name__)

RISK_COLUMNS = ("copula", "margin", "beta", "var", "cvar", "ccvar", "method", "stderr", "runtime_ms")
BACKTEST_COLUMNS = ("window", "date", "copula", "margin", "beta", "var", "cvar", "ccvar", "realized", "runtime_ms")
BACKTEST_CHUNK = 40
_MISSING = {"", "na", "nan", "null", "none", "-"}


class InputError(CopulaError, ValueError):
    """Malformed price file; the message carries the line number."""


# ------------------------------------------------------------------ ingest


@dataclass(frozen=True)
class PriceData:
    dates: tuple
    symbols: tuple
    prices: np.ndarray
    dropped: int = 0

    @property
    def returns(self) -> np.ndarray:
        """``T x d`` negated percent log-returns (positive = loss)."""
        return -100.0 * np.diff(np.log(self.prices), axis=0)

    @property
    def return_dates(self) -> tuple:
        return self.dates[1:]


def ingest(path) -> PriceData:
    """Read ``date,SYM1,...,SYMd`` prices; rows with a missing price are dropped."""
    path = Path(path)
    dates, rows, dropped = [], [], 0
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if len(header) < 2 or header[0].strip().lower() != "date":
            raise InputError(f"{path}:1: header must be 'date,SYM1,...'")
        symbols = tuple(h.strip() for h in header[1:])
        for lineno, rec in enumerate(reader, 2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            cells = [c.strip() for c in rec[1:]]
            if any(c.lower() in _MISSING for c in cells):
                dropped += 1
                continue
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-numeric price in {rec!r}") from None
            if any(not (v > 0 and math.isfinite(v)) for v in vals):
                raise InputError(f"{path}:{lineno}: prices must be strictly positive")
            if dates and rec[0].strip() <= dates[-1]:
                raise InputError(f"{path}:{lineno}: dates must be strictly ascending")
            dates.append(rec[0].strip())
            rows.append(vals)
    if len(rows) < 2:
        raise InputError(f"{path}: need at least two complete price rows")
    if dropped:
        log.info("dropped %d rows with missing prices", dropped)
    return PriceData(tuple(dates), symbols, np.array(rows), dropped)


def describe(returns, symbols) -> list[dict]:
    """Per-asset descriptive statistics (kurtosis is excess kurtosis)."""
    r = np.asarray(returns, dtype=float)
    out = []
    for j, sym in enumerate(symbols):
        x = r[:, j]
        out.append({"asset": sym, "mean": x.mean(), "std": x.std(ddof=1), "min": x.min(),
                    "median": float(np.median(x)), "max": x.max(),
                    "kurtosis": float(stats.kurtosis(x)), "skewness": float(stats.skew(x))})
    return out


def write_prices(path, dates, symbols, prices) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", *symbols])
        for d, row in zip(dates, prices):
            w.writerow([d, *(repr(float(v)) for v in row)])


# ------------------------------------------------------------------ fitting


def fit_margins(returns, innovation, start=None, compute_stderr=True) -> list[MarginModel]:
    r = np.asarray(returns, dtype=float)
    starts = start or [None] * r.shape[1]
    return [fit_ar_garch(r[:, j], innovation, start=s, compute_stderr=compute_stderr)
            for j, s in enumerate(starts)]


def pit_panel(models, returns) -> UniformPanel:
    r = np.asarray(returns, dtype=float)
    return UniformPanel(np.column_stack([pit_transform(m, r[:, j]) for j, m in enumerate(models)]))


def fit_copulas(panel: UniformPanel, families, errors=None) -> dict:
    """Fitted spec per family; the independence copula needs no fit."""
    out = {}
    for fam in families:
        fam = Family.parse(fam)
        if fam is Family.INDEPENDENCE:
            out[fam] = CopulaFit(CopulaSpec(fam, None, panel.dim), math.nan, 0.0, FitMethod.IFM)
            continue
        try:
            out[fam] = fit_copula_mle(panel, fam, FitMethod.IFM)
        except CopulaError as exc:
            if errors is None:
                raise
            errors.append(f"fit {fam.value}: {exc}")
    return out


# ------------------------------------------------------------------ risk


@dataclass(frozen=True)
class RiskRow:
    copula: str
    margin: str
    beta: float
    var: float
    cvar: float
    ccvar: float
    method: str
    stderr: float
    runtime_ms: float


@dataclass
class RiskReport:
    rows: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)

    def spread(self, margin, beta, families=ARCHIMEDEAN_FAMILIES) -> dict:
        """Range of CVaR and CCVaR across copula families at fixed margins and beta."""
        names = {Family.parse(f).value for f in families}
        sel = [r for r in self.rows if r.margin == str(margin) and r.beta == beta and r.copula in names]
        if not sel:
            return {"cvar": math.nan, "ccvar": math.nan}
        cv = [r.cvar for r in sel]
        cc = [r.ccvar for r in sel]
        return {"cvar": max(cv) - min(cv), "ccvar": max(cc) - min(cc)}


def _seed_for(seed, *keys):
    return np.random.SeedSequence([int(seed), *keys])


def risk_from_models(models, fits: dict, cfg: PipelineConfig, innovation, report=None, seed_keys=()) -> RiskReport:
    """Risk rows for already-fitted margins and copulas (no refitting)."""
    report = report or RiskReport()
    d = len(models)
    port = PortfolioSpec(cfg.resolved_weights(d), tuple(ForecastMargin(m) for m in models))
    mc_port = PortfolioSpec(port.weights, tuple(ForecastMargin(m, tabulated=True) for m in models))
    qcfg = QuadConfig(abs_tol=cfg.abs_tol, rel_tol=cfg.rel_tol)
    innov = str(InnovationKind.parse(innovation))
    for k, (fam, fit) in enumerate(fits.items()):
        t0 = time.perf_counter()
        try:
            panel = sample_copula(fit.spec, cfg.mc_samples, seed=_seed_for(cfg.seed, *seed_keys, k))
            losses = mc_port.loss(panel.data)
        except CopulaError as exc:
            report.errors.append(f"{fam.value}/{innov}: sampling failed: {exc}")
            continue
        shared_ms = (time.perf_counter() - t0) * 1e3
        for beta in cfg.betas:
            t1 = time.perf_counter()
            try:
                var, cvar = empirical_var_cvar(losses, beta)
                cc = ccvar_quadrature(fit.spec, port, beta, qcfg)
            except CopulaError as exc:
                report.errors.append(f"{fam.value}/{innov}/beta={beta}: {exc}")
                continue
            ms = shared_ms / len(cfg.betas) + (time.perf_counter() - t1) * 1e3
            report.rows.append(RiskRow(fam.value, innov, float(beta), var, cvar, cc.value,
                                       str(cc.method), math.nan, ms))
    return report


def risk_once(returns, cfg: PipelineConfig) -> RiskReport:
    """Fit margins per innovation, fit every requested copula, report risk rows."""
    r = np.asarray(returns, dtype=float)
    report = RiskReport()
    for ik, innov in enumerate(cfg.innovations()):
        try:
            models = fit_margins(r, innov)
        except CopulaError as exc:
            report.errors.append(f"margins {innov}: {exc}")
            continue
        panel = pit_panel(models, r)
        fits = fit_copulas(panel, cfg.families(), report.errors)
        report.margins[str(innov)] = models
        report.fits[str(innov)] = fits
        risk_from_models(models, fits, cfg, innov, report, seed_keys=(ik,))
    return report


# ------------------------------------------------------------------ backtest


@dataclass(frozen=True)
class BacktestRow:
    window: int
    date: str
    copula: str
    margin: str
    beta: float
    var: float
    cvar: float
    ccvar: float
    realized: float
    runtime_ms: float


def _backtest_chunk(r, dates, starts, cfg, innov, weights):
    rows, errors = [], []
    prev = None
    for s in starts:
        t0 = time.perf_counter()
        win = r[s:s + cfg.window]
        try:
            models = fit_margins(win, innov, start=prev, compute_stderr=False)
        except CopulaError as exc:
            errors.append(f"window {s}: margins: {exc}")
            prev = None
            continue
        prev = models
        panel = pit_panel(models, win)
        fits = fit_copulas(panel, cfg.families(), errors)
        rep = risk_from_models(models, fits, cfg, innov, seed_keys=(s,))
        errors.extend(f"window {s}: {e}" for e in rep.errors)
        realized = float(np.dot(weights, r[s + cfg.window]))
        ms = (time.perf_counter() - t0) * 1e3
        for row in rep.rows:
            rows.append(BacktestRow(s, dates[s + cfg.window], row.copula, row.margin, row.beta,
                                    row.var, row.cvar, row.ccvar, realized, ms))
    return rows, errors


def backtest(returns, dates, cfg: PipelineConfig, innovation=None):
    """Rolling one-day-ahead forecasts with step one.

    Window ``s`` uses returns ``s .. s+window-1`` and is scored against the
    return at ``s+window``, so ``T`` returns give ``T - window`` rows.
    Windows are grouped into fixed chunks; each chunk warm-starts its GARCH
    fits from the previous window, so output does not depend on ``workers``.
    """
    r = np.asarray(returns, dtype=float)
    T, d = r.shape
    if T <= cfg.window:
        raise DomainError(f"series length {T} must exceed the window {cfg.window}")
    innov = InnovationKind.parse(innovation or cfg.innovations()[0])
    weights = np.asarray(cfg.resolved_weights(d))
    dates = tuple(dates) if dates is not None else tuple(str(i) for i in range(T))
    starts = list(range(T - cfg.window))
    chunks = [starts[i:i + BACKTEST_CHUNK] for i in range(0, len(starts), BACKTEST_CHUNK)]

    def run(chunk):
        return _backtest_chunk(r, dates, chunk, cfg, innov, weights)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    rows = [row for res in results for row in res[0]]
    errors = [e for res in results for e in res[1]]
    for e in errors:
        log.warning("%s", e)
    return rows, errors


# ------------------------------------------------------------------ sweeps


def _sweep_thetas(fam, taus=(0.1, 0.3, 0.5, 0.7)):
    fam = Family.parse(fam)
    if fam is Family.AMH:
        return (0.2, 0.5, 0.8, 0.95)
    return tuple(round(tau_inverse(fam, t), 6) for t in taus)


def sweep_beta(d=5, betas=None, families=None, cfg=QuadConfig()) -> list[dict]:
    """CCVaR against beta for several dependence levels, uniform margins, equal weights."""
    betas = betas if betas is not None else tuple(np.round(np.linspace(0.5, 0.99, 50), 4))
    families = families or (Family.INDEPENDENCE, *ARCHIMEDEAN_FAMILIES)
    port = PortfolioSpec.uniform(d)
    out = []
    for fam in families:
        fam = Family.parse(fam)
        thetas = (None,) if fam is Family.INDEPENDENCE else _sweep_thetas(fam)
        for th in thetas:
            spec = CopulaSpec(fam, th, d)
            for b in betas:
                try:
                    v = ccvar_quadrature(spec, port, float(b), cfg).value
                except CopulaError:
                    v = math.nan
                out.append({"copula": fam.value, "theta": th, "beta": float(b), "ccvar": v})
    return out


def sweep_theta(families=(Family.AMH, Family.GUMBEL), beta=0.95, d=2, weights=None, n=60,
                cfg=QuadConfig()) -> list[dict]:
    """CCVaR against theta at fixed beta with uniform margins (default: all weight on asset 1)."""
    weights = weights or (1.0,) + (0.0,) * (d - 1)
    port = PortfolioSpec.uniform(d, weights)
    grids = {Family.AMH: np.linspace(0.01, 0.99, n), Family.GUMBEL: np.linspace(1.0, 10.0, n),
             Family.CLAYTON: np.geomspace(0.05, 50, n), Family.FRANK: np.geomspace(0.1, 50, n),
             Family.JOE: np.linspace(1.0, 10.0, n)}
    out = []
    for fam in families:
        fam = Family.parse(fam)
        for th in grids[fam]:
            try:
                v = ccvar_quadrature(CopulaSpec(fam, float(th), d), port, beta, cfg).value
            except CopulaError:
                v = math.nan
            out.append({"copula": fam.value, "theta": float(th), "beta": beta, "ccvar": v})
    return out


# ------------------------------------------------------------------ synthetic data


def synthetic_prices(T=1360, d=7, family="gumbel", theta=1.57, innovation="student_t", nu=6.0,
                     garch=(0.02, 0.05, 0.05, 0.08, 0.9), seed=0, burn_in=500, start="2015-01-02"):
    """Prices whose ``T`` returns follow AR(1)-GARCH(1,1) margins joined by an Archimedean copula.

    ``garch`` is ``(a0, a1, c0, c1, d1)``, shared by every asset.  The copula
    couples the standardized innovations.
    """
    from ._kernels import ar_garch_simulate

    kind = InnovationKind.parse(innovation)
    innov = make_innovation(kind, *(() if kind is InnovationKind.NORMAL else
                                    (nu,) if kind is InnovationKind.STUDENT_T else (nu, 1.1)))
    spec = CopulaSpec(family, theta, d)
    u = sample_copula(spec, T + burn_in, seed=seed).data
    z = np.asarray(innov.ppf(u))
    a0, a1, c0, c1, d1 = garch
    var0 = c0 / (1 - c1 - d1)
    r = np.column_stack([ar_garch_simulate(z[:, j], a0, a1, c0, c1, d1, a0 / (1 - a1), 0.0, var0)[0]
                         for j in range(d)])[burn_in:]
    logp = np.log(100.0) - np.vstack([np.zeros(d), np.cumsum(r, axis=0)]) / 100.0
    dates = np.busday_offset(np.datetime64(start, "D"), np.arange(T + 1), roll="forward")
    symbols = tuple(f"S{j + 1}" for j in range(d))
    return PriceData(tuple(str(x) for x in dates), symbols, np.exp(logp))


# ------------------------------------------------------------------ output


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    return "" if v is None else str(v)


def _write_rows(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            rec = row if isinstance(row, dict) else asdict(row)
            w.writerow([_fmt(rec[c]) for c in columns])


def emit(kind, rows, out_dir, name=None, columns=None) -> Path:
    """Write report rows as CSV with a fixed column order; returns the file path."""
    if not rows:
        raise DomainError("nothing to emit: the report is empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    defaults = {"risk": RISK_COLUMNS, "backtest": BACKTEST_COLUMNS}
    cols = columns or defaults.get(kind) or tuple(rows[0].keys())
    path = out / (name or f"{kind}.csv")
    _write_rows(path, cols, rows)
    return path
