import json

import numpy as np
import pytest

from shapespline.cli import cli_run, read_xy_csv
from shapespline.experiments.records import read_records_csv


def write_xy(path, x, y):
    path.write_text("x,y\n" + "".join(f"{a!r},{b!r}\n" for a, b in zip(x.tolist(), y.tolist())))


def test_fit_convex_noiseless_data(tmp_path, capsys):
    # convex piecewise-linear data with kinks on the eight uniform knots of [2, 6]
    x = np.linspace(2.0, 6.0, 161)
    u = (x - 2.0) / 4.0
    y = 0.3 - 0.8 * u + 0.6 * np.maximum(u - 0.25, 0) + 0.4 * np.maximum(u - 0.5, 0) + np.maximum(u - 0.75, 0)
    data = tmp_path / "convex.csv"
    write_xy(data, x, y)
    assert cli_run(["fit", "--m", "2", "--knots", "8", str(data), "--out", str(tmp_path / "f")]) == 0
    grid = np.loadtxt(tmp_path / "f.grid.csv", delimiter=",", skiprows=1)
    coef = np.loadtxt(tmp_path / "f.coef.csv", delimiter=",", skiprows=1)
    assert coef.shape == (9, 2)
    assert grid[0, 0] == 2.0 and grid[-1, 0] == 6.0
    assert np.diff(grid[:, 1], 2).min() >= -1e-6
    fitted = np.interp(x, grid[:, 0], grid[:, 1])
    assert np.abs(fitted - y).max() <= 1e-9
    assert "max_residual" in capsys.readouterr().out


def test_fit_reads_config_and_flags_override(tmp_path):
    x = np.linspace(0, 1, 41)
    data = tmp_path / "d.csv"
    write_xy(data, x, x**2)
    cfg = tmp_path / "fit.cfg"
    cfg.write_text("m = 1\nknots = 3\n")
    assert cli_run(["fit", "--config", str(cfg), str(data), "--out", str(tmp_path / "a")]) == 0
    assert len((tmp_path / "a.coef.csv").read_text().splitlines()) == 1 + 3
    assert cli_run(["fit", "--config", str(cfg), "--knots", "5", str(data), "--out", str(tmp_path / "b")]) == 0
    assert len((tmp_path / "b.coef.csv").read_text().splitlines()) == 1 + 5


@pytest.mark.parametrize(
    "body, line",
    [
        ("x,y\n0,1\n0.5,oops\n1,2\n", ":3:"),
        ("a,b\n0,1\n", ":1:"),
        ("x,y\n0,1\n0.5,1,2\n1,2\n", ":3:"),
        ("x,y\n0,1\n0.5,1\n0.4,2\n", ":4:"),
        ("x,y\n0,1\n0.5,nan\n1,2\n", ":3:"),
    ],
)
def test_malformed_csv_exits_2_with_line(tmp_path, capsys, body, line):
    data = tmp_path / "bad.csv"
    data.write_text(body)
    assert cli_run(["fit", str(data)]) == 2
    assert f"bad.csv{line}" in capsys.readouterr().err


def test_malformed_config_exits_2_with_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("m = 2\nmax_k = many\n")
    assert cli_run(["bounds", "--config", str(cfg), "--seed", "1"]) == 2
    assert "bad.cfg:2:" in capsys.readouterr().err
    cfg.write_text("# ok\nwidth = 3\n")
    assert cli_run(["bounds", "--config", str(cfg), "--seed", "1"]) == 2
    assert "bad.cfg:2: unknown key" in capsys.readouterr().err


def test_seed_is_mandatory(capsys):
    assert cli_run(["simulate", "--truth", "cubic"]) == 2
    assert cli_run(["rates", "--kind", "stochastic", "--sigma", "0.1"]) == 2
    assert "--seed" in capsys.readouterr().err


def test_bad_subcommand():
    assert cli_run(["launch"]) == 2


def test_simulate_is_byte_identical(tmp_path):
    args = ["simulate", "--truth", "cubic", "--sigma", "0.1", "--n", "512", "--seed", "7"]
    assert cli_run(args + ["--out", str(tmp_path / "a.csv")]) == 0
    assert cli_run(args + ["--out", str(tmp_path / "b.csv")]) == 0
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    x, y = read_xy_csv(tmp_path / "a.csv")
    assert x.size == 513 and np.abs(y - x**3).max() < 1.0


def test_bounds_suite_and_report(tmp_path, capsys):
    prefix = str(tmp_path / "b")
    assert cli_run(["bounds", "--m", "3", "--max-k", "8", "--seed", "1", "--out", prefix]) == 0
    summary = json.loads((tmp_path / "b.json").read_text())
    assert summary["failed"] == 0 and summary["checks"] > 100
    assert summary["config"]["seed"] == 1
    recs = read_records_csv((tmp_path / "b.csv").read_text())
    assert len(recs) == summary["checks"]
    capsys.readouterr()
    assert cli_run(["report", prefix + ".csv"]) == 0
    out = capsys.readouterr().out
    assert "F-identity" in out and "0 failed" in out


def test_report_exit_codes(tmp_path, capsys):
    good = tmp_path / "r.csv"
    good.write_text(
        "experiment,statement,instance,measured,bound,margin,passed,note\n"
        "e,s,i,2,1,-1,0,\n"
    )
    assert cli_run(["report", str(good)]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("experiment,statement,instance,measured,bound,margin,passed,note\ne,s\n")
    assert cli_run(["report", str(bad)]) == 2
    assert "bad.csv:2:" in capsys.readouterr().err


def test_gramian_and_lipschitz_commands(tmp_path):
    g = str(tmp_path / "g")
    assert cli_run(["gramian", "--m-list", "1,2", "--k-list", "6,12", "--samples", "2", "--alphas", "3", "--seed", "2", "--out", g]) == 0
    assert json.loads((tmp_path / "g.json").read_text())["rho_hat"]["1"] == 1.0
    lp = str(tmp_path / "l")
    args = ["lipschitz", "--m", "2", "--grids", "64:4,128:4", "--pairs", "200", "--seed", "3", "--out", lp]
    assert cli_run(args) == 0
    first = (tmp_path / "l.csv").read_bytes()
    assert cli_run(args) == 0
    assert (tmp_path / "l.csv").read_bytes() == first


def test_rates_command(tmp_path):
    r = str(tmp_path / "r")
    assert cli_run(["rates", "--kind", "bias", "--m", "1", "--grids", "256:4,512:8,1024:16", "--out", r]) == 0
    s = str(tmp_path / "s")
    args = ["rates", "--kind", "stochastic", "--m", "2", "--sigma", "0.2", "--grids", "256,1024", "--replicates", "5", "--seed", "9", "--out", s]
    assert cli_run(args) in (0, 1)
    assert "stochastic-ratio-factor" in (tmp_path / "s.csv").read_text()
    assert cli_run(["rates", "--kind", "bias", "--grids", "256:4", "--out", r]) == 2
