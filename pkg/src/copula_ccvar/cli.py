"""Command-line interface: ``copula-ccvar <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import PipelineConfig, load_config
from .errors import CopulaError
from .fit import CopulaFit, fit_copula_mle, gof_tail_distance
from .generators import CopulaSpec, Family
from .margins import MarginModel
from .pipeline import (
    PriceData,
    backtest,
    describe,
    emit,
    fit_copulas,
    fit_margins,
    ingest,
    pit_panel,
    risk_from_models,
    risk_once,
    sweep_beta,
    sweep_theta,
    synthetic_prices,
    write_prices,
)
from .sampling import sample_copula

log = logging.getLogger("copula_ccvar")

_SHARED = ("input", "family", "innovation", "betas", "weights", "window", "mc_samples", "seed", "out")


def _add_shared(p):
    p.add_argument("--input", help="price CSV with header date,SYM1,...,SYMd")
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--family", help="copula family, comma list, or 'all'")
    p.add_argument("--innovation", help="normal, student_t, skewed_t, comma list, or 'all'")
    p.add_argument("--beta", dest="betas", help="comma-separated risk levels, e.g. 0.95,0.99")
    p.add_argument("--weights", help="comma-separated portfolio weights (default equal)")
    p.add_argument("--window", type=int, help="rolling window length for backtests")
    p.add_argument("--mc-samples", dest="mc_samples", type=int, help="copula samples for VaR/CVaR")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="copula-ccvar",
                                     description="Copula-based CVaR for Archimedean copulas")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="prices to negated percent log-returns and summary statistics")
    _add_shared(p)
    p = sub.add_parser("fit-margins", help="fit AR(1)-GARCH(1,1) margins")
    _add_shared(p)
    p = sub.add_parser("fit-copula", help="fit copula families on margin PITs")
    _add_shared(p)
    p.add_argument("--gamma", dest="gammas", help="tail-distance thresholds, e.g. 0.8,0.9")
    p = sub.add_parser("risk", help="one-shot VaR / CVaR / CCVaR report")
    _add_shared(p)
    p.add_argument("--models", help="reuse a models.txt written by a previous run instead of refitting")
    p = sub.add_parser("backtest", help="rolling one-day-ahead forecasts")
    _add_shared(p)
    p.add_argument("--workers", type=int)
    p = sub.add_parser("sweep", help="plot data: CCVaR against beta and against theta")
    _add_shared(p)
    p.add_argument("--dim", type=int, default=5)
    p = sub.add_parser("sample", help="draw a copula sample panel as CSV")
    _add_shared(p)
    p.add_argument("--theta", type=float)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--rows", type=int, default=10_000)
    p = sub.add_parser("synth", help="write a synthetic price CSV")
    _add_shared(p)
    p.add_argument("--theta", type=float, default=1.57)
    p.add_argument("--dim", type=int, default=7)
    p.add_argument("--rows", type=int, default=1360, help="number of returns (prices = rows + 1)")
    return parser


def resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    over = {k: getattr(args, k, None) for k in (*_SHARED, "gammas", "workers")}
    if over.get("betas") is not None and not over["betas"].replace(",", "").strip():
        raise CopulaError("--beta needs at least one value")
    return cfg.with_overrides(**over)


def _need_input(cfg):
    if not cfg.input:
        raise CopulaError("--input (or input= in the config file) is required")
    return ingest(cfg.input)


def _select_assets(data: PriceData, cfg) -> PriceData:
    if not cfg.assets:
        return data
    idx = [data.symbols.index(a) for a in cfg.assets]
    return PriceData(data.dates, tuple(data.symbols[i] for i in idx), data.prices[:, idx], data.dropped)


def _write_models(path, margins_by_innov, fits_by_innov):
    with open(path, "w") as fh:
        for innov, models in margins_by_innov.items():
            for j, m in enumerate(models):
                fh.write(m.to_kv(prefix=f"margin.{innov}.{j}."))
            for fam, fit in fits_by_innov.get(innov, {}).items():
                if fam is Family.INDEPENDENCE:
                    continue
                fh.write(fit.to_kv(prefix=f"copula.{innov}.{fam.value}."))


def _read_models(path, d, innov, families):
    text = Path(path).read_text()
    models = [MarginModel.from_kv(text, prefix=f"margin.{innov}.{j}.") for j in range(d)]
    fits = {}
    for fam in families:
        if fam is Family.INDEPENDENCE:
            fits[fam] = CopulaFit(CopulaSpec(fam, None, d), float("nan"), 0.0)
        else:
            fits[fam] = CopulaFit.from_kv(text, prefix=f"copula.{innov}.{fam.value}.")
    return models, fits


def cmd_ingest(args, cfg):
    data = _select_assets(_need_input(cfg), cfg)
    out = Path(cfg.out)
    rows = [{"date": d, **dict(zip(data.symbols, map(float, r)))} for d, r in zip(data.return_dates, data.returns)]
    emit("returns", rows, out, columns=("date", *data.symbols))
    emit("stats", describe(data.returns, data.symbols), out,
         columns=("asset", "mean", "std", "min", "median", "max", "kurtosis", "skewness"))
    print(f"{data.returns.shape[0]} returns for {len(data.symbols)} assets; dropped {data.dropped} rows")


def cmd_fit_margins(args, cfg):
    data = _select_assets(_need_input(cfg), cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    with open(out / "margins.txt", "w") as fh:
        for innov in cfg.innovations():
            models = fit_margins(data.returns, innov)
            for sym, m in zip(data.symbols, models):
                fh.write(m.to_kv(prefix=f"{innov}.{sym}."))
                rows.append({"asset": sym, "innovation": str(innov), **m.param_dict(),
                             "loglik": m.loglik, "aic": m.aic})
    cols = ("asset", "innovation", "a0", "a1", "c0", "c1", "d1", "nu", "xi", "loglik", "aic")
    emit("margins", [{c: r.get(c) for c in cols} for r in rows], out, columns=cols)


def cmd_fit_copula(args, cfg):
    data = _select_assets(_need_input(cfg), cfg)
    rows = []
    for innov in cfg.innovations():
        models = fit_margins(data.returns, innov, compute_stderr=False)
        panel = pit_panel(models, data.returns)
        for fam in cfg.families():
            if fam is Family.INDEPENDENCE:
                continue
            fit = fit_copula_mle(panel, fam)
            row = {"innovation": str(innov), "copula": fam.value, "theta": fit.theta,
                   "stderr": fit.stderr, "loglik": fit.loglik}
            for g in cfg.gammas:
                row[f"d_{g:g}"] = gof_tail_distance(panel, fit.spec, g)
            rows.append(row)
    emit("copulas", rows, cfg.out)


def cmd_risk(args, cfg):
    data = _select_assets(_need_input(cfg), cfg)
    if args.models:
        from .pipeline import RiskReport

        report = RiskReport()
        for ik, innov in enumerate(cfg.innovations()):
            models, fits = _read_models(args.models, data.returns.shape[1], innov, cfg.families())
            risk_from_models(models, fits, cfg, innov, report, seed_keys=(ik,))
    else:
        report = risk_once(data.returns, cfg)
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        _write_models(Path(cfg.out) / "models.txt", report.margins, report.fits)
    for e in report.errors:
        log.warning("%s", e)
    path = emit("risk", report.rows, cfg.out)
    print(f"wrote {len(report.rows)} rows to {path} ({len(report.errors)} cells failed)")


def cmd_backtest(args, cfg):
    data = _select_assets(_need_input(cfg), cfg)
    rows, errors = backtest(data.returns, data.return_dates, cfg)
    path = emit("backtest", rows, cfg.out)
    print(f"wrote {len(rows)} rows to {path} ({len(errors)} window failures)")


def cmd_sweep(args, cfg):
    p1 = emit("sweep_beta", sweep_beta(d=args.dim), cfg.out, columns=("copula", "theta", "beta", "ccvar"))
    p2 = emit("sweep_theta", sweep_theta(), cfg.out, columns=("copula", "theta", "beta", "ccvar"))
    print(f"wrote {p1} and {p2}")


def cmd_sample(args, cfg):
    fams = cfg.families()
    if len(fams) != 1:
        raise CopulaError("sample needs exactly one --family")
    spec = CopulaSpec(fams[0], args.theta, args.dim)
    panel = sample_copula(spec, args.rows, seed=cfg.seed, workers=cfg.workers)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    panel.to_csv(out / "sample.csv")
    print(f"wrote {panel.rows} x {panel.dim} panel to {out / 'sample.csv'}")


def cmd_synth(args, cfg):
    fams = cfg.families()
    fam = fams[0] if len(fams) == 1 else Family.GUMBEL
    data = synthetic_prices(T=args.rows, d=args.dim, family=fam, theta=args.theta,
                            innovation=cfg.innovations()[0], seed=cfg.seed)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_prices(out / "prices.csv", data.dates, data.symbols, data.prices)
    print(f"wrote {len(data.dates)} prices to {out / 'prices.csv'}")


COMMANDS = {"ingest": cmd_ingest, "fit-margins": cmd_fit_margins, "fit-copula": cmd_fit_copula,
            "risk": cmd_risk, "backtest": cmd_backtest, "sweep": cmd_sweep, "sample": cmd_sample,
            "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except (CopulaError, ValueError) as exc:
        parser.error(str(exc))
    try:
        COMMANDS[args.command](args, cfg)
    except (CopulaError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
