"""Command-line driver: fitting, simulation, verification suites and reports.

Exit status is 0 when every bound check passes, 1 when a check fails and 2
for malformed input (CSV, config file or flags).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ShapeSplineError
from .estimator import fit
from .experiments.catalog import TRUTHS, get_truth, simulate_model
from .experiments.config import ExperimentConfig, parse_key_value, thread_count
from .experiments.rates import rate_experiment, stochastic_ratio_experiment
from .experiments.records import (
    all_passed,
    fmt,
    read_records_csv,
    records_to_csv,
    summarize,
    summary_json,
)
from .experiments.suites import gramian_sweep, lipschitz_sweep, run_bound_suite
from .splines import DesignPoints, KnotSequence

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Malformed user input; the message carries the location."""


# ---------------------------------------------------------------------------
# value parsers shared by flags and config files


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


def _grid_list(text: str) -> tuple[tuple[int, int], ...]:
    """``n:K`` pairs separated by commas; a bare ``n`` lets the schedule pick ``K``."""
    out = []
    for item in text.replace(" ", "").split(","):
        if not item:
            continue
        n, _, K = item.partition(":")
        out.append((int(n), int(K) if K else 0))
    return tuple(out)


def _optional_float(text: str) -> float | None:
    return None if text.lower() in ("", "none") else float(text)


# option name -> (parser, default); None default means "not set"
COMMON = {"seed": (int, None)}
OPTIONS: dict[str, dict[str, tuple[Callable, object]]] = {
    "fit": {"m": (int, 2), "knots": (int, 8), "grid_size": (int, 1001), "out": (str, None)},
    "simulate": {
        "truth": (str, None),
        "sigma": (float, 0.0),
        "n": (int, 512),
        "design": (str, "uniform"),
        "c_omega": (float, 2.0),
        "out": (str, None),
    },
    "bounds": {
        "m": (int, 2),
        "max_k": (int, 6),
        "samples": (int, 4),
        "c_kappa_1": (float, 0.75),
        "c_kappa_2": (float, 1.5),
        "c_omega": (float, 2.0),
        "j_list": (_int_list, (1,)),
        "max_l": (int, 200_000),
        "grids": (_grid_list, ()),
        "out": (str, "bounds"),
    },
    "gramian": {
        "m_list": (_int_list, (1, 2, 3, 4)),
        "k_list": (_int_list, (10, 20, 40)),
        "samples": (int, 50),
        "alphas": (int, 20),
        "c_kappa_1": (float, 0.5),
        "c_kappa_2": (float, 2.0),
        "max_l": (int, 200_000),
        "out": (str, "gramian"),
    },
    "lipschitz": {
        "m": (int, 2),
        "grids": (_grid_list, ((128, 5), (512, 5), (2048, 5))),
        "samples": (int, 1),
        "pairs": (int, 10_000),
        "c_kappa_1": (float, 0.75),
        "c_kappa_2": (float, 1.5),
        "c_omega": (float, 2.0),
        "rho": (_optional_float, None),
        "out": (str, "lipschitz"),
    },
    "rates": {
        "kind": (str, "bias"),
        "m": (int, 2),
        "truth": (str, ""),
        "grids": (_grid_list, ((256, 4), (512, 8), (1024, 16), (2048, 32))),
        "q": (float, 3.0),
        "sigma": (float, 0.0),
        "replicates": (int, 20),
        "out": (str, "rates"),
    },
}
STOCHASTIC = {"simulate", "bounds", "gramian", "lipschitz"}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shapespline", description="Shape-constrained B-spline regression and verification suites.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "fit": "fit a shape-constrained spline to x,y CSV data",
        "simulate": "draw y = f(x) + sigma * z from a catalog truth",
        "bounds": "certify the matrix bounds for one spline order",
        "gramian": "measure Gramian inverse norms of subsampled knots",
        "lipschitz": "exact and probed Lipschitz constants of the solution map",
        "rates": "bias, stochastic or total-risk rate experiment",
    }
    for name, opts in OPTIONS.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="flat key = value file; flags override it")
        p.add_argument("--seed", default=None, help="64-bit seed (required for random experiments)")
        for key in opts:
            p.add_argument(_flag(key), dest=key, default=None)
        if name == "fit":
            p.add_argument("data", help="CSV file with header x,y")
    rp = sub.add_parser("report", help="summarise result-record CSV files")
    rp.add_argument("files", nargs="+")
    return parser


def resolve_options(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then flags."""
    spec = {**COMMON, **OPTIONS[command]}
    values = {k: d for k, (_, d) in spec.items()}
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"{path}: cannot read config: {exc.strerror}") from None
        try:
            entries = parse_key_value(text, str(path))
        except ValueError as exc:
            raise InputError(str(exc)) from None
        for key, (raw, lineno) in entries.items():
            if key not in spec:
                raise InputError(f"{path}:{lineno}: unknown key {key!r} for '{command}'")
            try:
                values[key] = spec[key][0](raw)
            except ValueError:
                raise InputError(f"{path}:{lineno}: bad value {raw!r} for {key!r}") from None
    for key, (parse, _) in spec.items():
        raw = getattr(args, key, None)
        if raw is None:
            continue
        try:
            values[key] = parse(raw)
        except ValueError:
            raise InputError(f"{_flag(key)}: bad value {raw!r}") from None
    return values


# ---------------------------------------------------------------------------
# CSV data


def read_xy_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``x,y`` samples; raises ``InputError`` naming the offending line."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: cannot read: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path}: not UTF-8 text") from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["x", "y"]:
        raise InputError(f"{path}:1: header must be 'x,y'")
    xs, ys = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise InputError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
        try:
            x, y = float(row[0]), float(row[1])
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric value in {','.join(row)!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InputError(f"{path}:{lineno}: values must be finite")
        if xs and x <= xs[-1]:
            raise InputError(f"{path}:{lineno}: x must be strictly increasing")
        xs.append(x)
        ys.append(y)
    if len(xs) < 3:
        raise InputError(f"{path}: need at least 3 samples, got {len(xs)}")
    return np.array(xs), np.array(ys)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# commands


def cmd_fit(opts: dict, args) -> int:
    data = Path(args.data)
    x, y = read_xy_csv(data)
    lo, hi = x[0], x[-1]
    u = (x - lo) / (hi - lo)
    u[0], u[-1] = 0.0, 1.0
    K, m = opts["knots"], opts["m"]
    if K < 1 or m < 1:
        raise InputError("--knots and --m must be positive")
    try:
        result = fit(m, KnotSequence.uniform(K), DesignPoints(u), y)
    except ShapeSplineError as exc:
        raise InputError(f"{data}: {exc}") from None
    prefix = opts["out"] or str(data.with_suffix("")) + ".fit"
    coef = "index,coefficient\n" + "".join(f"{k + 1},{fmt(b)}\n" for k, b in enumerate(result.coefficients))
    grid_u = np.linspace(0.0, 1.0, opts["grid_size"])
    values = result(grid_u)
    grid_x = lo + (hi - lo) * grid_u
    grid = "x,fitted\n" + "".join(f"{fmt(a)},{fmt(b)}\n" for a, b in zip(grid_x, values))
    Path(prefix + ".coef.csv").write_text(coef, encoding="utf-8")
    Path(prefix + ".grid.csv").write_text(grid, encoding="utf-8")
    resid = float(np.abs(result(u) - y).max())
    print(f"fit: m={m} K={K} n={x.size - 1} active={len(result.active.alpha)} max_residual={resid:.6g} -> {prefix}.coef.csv, {prefix}.grid.csv")
    return EXIT_OK


def cmd_simulate(opts: dict, args) -> int:
    if not opts["truth"]:
        raise InputError("--truth is required; choose from " + ", ".join(TRUTHS))
    try:
        truth = get_truth(opts["truth"])
    except ValueError as exc:
        raise InputError(str(exc)) from None
    n, seed = opts["n"], opts["seed"]
    if n < 2:
        raise InputError("--n must be at least 2")
    if opts["design"] == "uniform":
        design = DesignPoints.uniform(n)
    elif opts["design"] == "random":
        from .experiments.catalog import random_design
        from .rng import Stream

        design = random_design(n, opts["c_omega"], Stream(seed, 0xD))
    else:
        raise InputError("--design must be 'uniform' or 'random'")
    if opts["sigma"] < 0:
        raise InputError("--sigma must be nonnegative")
    y = simulate_model(truth, design, opts["sigma"], seed, 0x5)
    text = "x,y\n" + "".join(f"{fmt(a)},{fmt(b)}\n" for a, b in zip(design.points, y))
    _write(opts["out"], text)
    return EXIT_OK


def _emit(experiment: str, records, opts: dict, extra: dict | None, started: float) -> int:
    prefix = opts["out"]
    extra = dict(extra or {})
    extra["wall_clock_seconds"] = round(time.perf_counter() - started, 3)
    extra["threads"] = thread_count()
    summary = summarize(experiment, records, {k: v for k, v in opts.items() if k != "out"}, extra)
    Path(prefix + ".csv").write_text(records_to_csv(records), encoding="utf-8")
    Path(prefix + ".json").write_text(summary_json(summary) + "\n", encoding="utf-8")
    print(f"{experiment}: {summary['checks']} checks, {summary['passed']} passed, {summary['failed']} failed -> {prefix}.csv")
    return EXIT_OK if all_passed(records) else EXIT_FAILED


def _config(kind: str, opts: dict, **extra) -> ExperimentConfig:
    fields = {k: v for k, v in opts.items() if k not in ("out", "design", "n")}
    fields.update(extra, kind=kind)
    try:
        return ExperimentConfig(**fields)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None


def cmd_bounds(opts: dict, args) -> int:
    started = time.perf_counter()
    cfg = _config("bounds", opts)
    try:
        records = run_bound_suite(cfg)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return _emit(f"bounds-m{cfg.m}-seed{cfg.seed}", records, opts, None, started)


def cmd_gramian(opts: dict, args) -> int:
    started = time.perf_counter()
    records, rho = gramian_sweep(
        opts["m_list"],
        opts["k_list"],
        opts["samples"],
        opts["seed"],
        alphas=opts["alphas"],
        c1=opts["c_kappa_1"],
        c2=opts["c_kappa_2"],
        max_l=opts["max_l"],
    )
    return _emit(f"gramian-seed{opts['seed']}", records, opts, {"rho_hat": {str(k): v for k, v in rho.items()}}, started)


def cmd_lipschitz(opts: dict, args) -> int:
    started = time.perf_counter()
    cfg = _config("lipschitz-sweep", opts)
    try:
        records, extra = lipschitz_sweep(cfg)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return _emit(f"lipschitz-m{cfg.m}-seed{cfg.seed}", records, opts, extra, started)


def cmd_rates(opts: dict, args) -> int:
    started = time.perf_counter()
    kind = opts["kind"]
    kinds = {"bias": "bias-rate", "stochastic": "stochastic-rate", "total": "total-risk"}
    if kind not in kinds:
        raise InputError("--kind must be bias, stochastic or total")
    if kind != "bias" and opts["seed"] is None:
        raise InputError("--seed is required for stochastic experiments")
    cfg = _config(kinds[kind], {**opts, "kind": kinds[kind]})
    try:
        if kind == "stochastic" and len(cfg.grids) == 2:
            records = stochastic_ratio_experiment(cfg)
        else:
            records = rate_experiment(kind, cfg)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    label = f"{kinds[kind]}-m{cfg.m}" + (f"-seed{cfg.seed}" if cfg.seed is not None else "")
    return _emit(label, records, opts, None, started)


def cmd_report(args) -> int:
    rows = []
    for name in args.files:
        path = Path(name)
        try:
            records = read_records_csv(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"{path}: cannot read: {exc.strerror}") from None
        except ValueError as exc:
            raise InputError(f"{path}:{str(exc).removeprefix('line ')}") from None
        rows.extend(records)
    table: dict[tuple[str, str], list] = {}
    for r in rows:
        entry = table.setdefault((r.experiment, r.statement), [0, 0, math.inf])
        entry[0] += 1
        entry[1] += int(r.passed)
        if math.isfinite(r.margin):
            entry[2] = min(entry[2], r.margin)
    header = f"{'experiment':<28} {'statement':<26} {'checks':>7} {'passed':>7} {'worst margin':>14}"
    print(header)
    print("-" * len(header))
    for (exp, stmt), (count, passed, worst) in table.items():
        margin = "-" if not math.isfinite(worst) else f"{worst:.4g}"
        print(f"{exp:<28} {stmt:<26} {count:>7} {passed:>7} {margin:>14}")
    failed = sum(not r.passed for r in rows)
    print(f"total: {len(rows)} checks, {len(rows) - failed} passed, {failed} failed")
    return EXIT_OK if failed == 0 else EXIT_FAILED


COMMANDS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
    "gramian": cmd_gramian,
    "lipschitz": cmd_lipschitz,
    "rates": cmd_rates,
}


def cli_run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if args.command == "report":
            return cmd_report(args)
        opts = resolve_options(args.command, args)
        if args.command in STOCHASTIC and opts["seed"] is None:
            raise InputError("--seed is required for this command")
        return COMMANDS[args.command](opts, args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(cli_run())


if __name__ == "__main__":
    main()
