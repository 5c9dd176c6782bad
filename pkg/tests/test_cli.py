import csv

import numpy as np
import pytest

from copula_ccvar.cli import main
from copula_ccvar.pipeline import RISK_COLUMNS


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def prices(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--rows", "420", "--dim", "3", "--seed", "5", "--out", str(out)]) == 0
    return out / "prices.csv"


def test_empty_beta_is_a_usage_error(prices, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["risk", "--input", str(prices), "--beta", "", "--out", str(tmp_path)])
    assert exc.value.code == 2
    assert "beta" in capsys.readouterr().err
    assert not any(tmp_path.iterdir())


def test_missing_input_is_reported(tmp_path, capsys):
    assert main(["ingest", "--out", str(tmp_path)]) == 1
    assert "--input" in capsys.readouterr().err


def test_ingest(prices, tmp_path):
    assert main(["ingest", "--input", str(prices), "--out", str(tmp_path)]) == 0
    returns = read_csv(tmp_path / "returns.csv")
    stats = read_csv(tmp_path / "stats.csv")
    assert len(returns) == 420 and list(returns[0]) == ["date", "S1", "S2", "S3"]
    assert [r["asset"] for r in stats] == ["S1", "S2", "S3"]


def test_fit_margins_and_copula(prices, tmp_path):
    assert main(["fit-margins", "--input", str(prices), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "margins.csv")
    assert len(rows) == 3 and all(r["innovation"] == "student_t" and float(r["nu"]) > 2 for r in rows)
    assert "student_t.S1.c0=" in (tmp_path / "margins.txt").read_text()
    assert main(["fit-copula", "--input", str(prices), "--family", "gumbel,clayton", "--gamma", "0.8",
                 "--out", str(tmp_path)]) == 0
    fits = read_csv(tmp_path / "copulas.csv")
    assert [f["copula"] for f in fits] == ["gumbel", "clayton"]
    assert float(fits[0]["theta"]) > 1 and float(fits[0]["d_0.8"]) >= 0


def test_risk_and_models_rerun(prices, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    common = ["--input", str(prices), "--family", "independence,gumbel,frank", "--mc-samples", "20000",
              "--beta", "0.9,0.95", "--seed", "7"]
    assert main(["risk", *common, "--out", str(first)]) == 0
    rows = read_csv(first / "risk.csv")
    assert list(rows[0]) == list(RISK_COLUMNS)
    assert len(rows) == 6
    for r in rows:
        assert float(r["var"]) <= float(r["cvar"]) <= float(r["ccvar"])
    assert main(["risk", *common, "--models", str(first / "models.txt"), "--out", str(second)]) == 0
    again = read_csv(second / "risk.csv")
    key = ("copula", "margin", "beta", "var", "cvar", "ccvar")
    assert [tuple(r[k] for k in key) for r in again] == [tuple(r[k] for k in key) for r in rows]


def test_config_file_and_override(prices, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"input = {prices}\nfamily = clayton\nbeta = 0.9\nmc_samples = 10000\nout = {tmp_path / 'x'}\n")
    assert main(["risk", "--config", str(cfg), "--beta", "0.95"]) == 0
    rows = read_csv(tmp_path / "x" / "risk.csv")
    assert [(r["copula"], r["beta"]) for r in rows] == [("clayton", "0.95")]


def test_backtest(prices, tmp_path):
    assert main(["backtest", "--input", str(prices), "--family", "gumbel", "--window", "416",
                 "--mc-samples", "5000", "--beta", "0.95", "--workers", "2", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "backtest.csv")
    assert [int(r["window"]) for r in rows] == [0, 1, 2, 3]


def test_sample(tmp_path):
    assert main(["sample", "--family", "joe", "--theta", "2", "--dim", "3", "--rows", "500",
                 "--seed", "1", "--out", str(tmp_path)]) == 0
    data = np.loadtxt(tmp_path / "sample.csv", delimiter=",", skiprows=1)
    assert data.shape == (500, 3) and np.all((data > 0) & (data < 1))
    assert main(["sample", "--family", "all", "--theta", "2", "--out", str(tmp_path)]) == 1


def test_sweep(tmp_path):
    assert main(["sweep", "--dim", "3", "--out", str(tmp_path)]) == 0
    beta_rows = read_csv(tmp_path / "sweep_beta.csv")
    theta_rows = read_csv(tmp_path / "sweep_theta.csv")
    assert list(beta_rows[0]) == ["copula", "theta", "beta", "ccvar"]
    assert {r["copula"] for r in theta_rows} == {"amh", "gumbel"}
