"""Convergence-rate experiments for bias, stochastic error and total risk."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..estimator import DEFAULT_GRID, FitResult, fit, project_noise_free, shape_violations
from ..splines import DesignPoints, KnotSequence
from .catalog import Truth, default_truth, get_truth, knot_schedule, simulate_model
from .config import ExperimentConfig, parallel_map
from .records import ResultRecord, check, info

SLOPE_TOL = 0.3
RATIO_FACTOR = 2.0
ZERO_ERROR = 1e-12  # errors at rounding level carry no slope information
TAG_RATES = 9


@dataclass(frozen=True)
class CellResult:
    """Errors for one ``(n, K)`` cell.  ``per_replicate`` rows are ``(||fhat - fbar||, ||fhat - f||, ||f - fbar||)``."""

    n: int
    K: int
    bias: float
    per_replicate: np.ndarray
    violations: int

    @property
    def stochastic(self) -> float:
        return float(self.per_replicate[:, 0].mean()) if self.per_replicate.size else 0.0

    @property
    def total(self) -> float:
        return float(self.per_replicate[:, 1].mean()) if self.per_replicate.size else self.bias


def resolve_grid(config: ExperimentConfig) -> list[tuple[int, int]]:
    return [(n, K if K else knot_schedule(n, config.q)) for n, K in config.grids]


def resolve_truth(config: ExperimentConfig) -> Truth:
    truth = get_truth(config.truth) if config.truth else default_truth(config.m)
    if truth.m != config.m:
        raise ValueError(f"truth {truth.name!r} belongs to order {truth.m}, not {config.m}")
    return truth


def run_cell(truth: Truth, m: int, n: int, K: int, sigma: float, replicates: int, seed: int | None, cell: int) -> CellResult:
    """Noise-free projection plus ``replicates`` noisy fits on uniform design and knots."""
    design = DesignPoints.uniform(n)
    knots = KnotSequence.uniform(K)
    x = np.linspace(0.0, 1.0, DEFAULT_GRID)
    fx = truth(x)
    fbar = project_noise_free(m, knots, design, truth(design.points))
    fbar_x = fbar(x)
    bias = float(np.abs(fbar_x - fx).max())
    violations = shape_violations(fbar)
    rows = []
    if sigma > 0:
        if seed is None:
            raise ValueError("a seed is required when sigma > 0")
        for r in range(replicates):
            y = simulate_model(truth, design, sigma, seed, TAG_RATES, cell, r)
            fhat: FitResult = fit(m, knots, design, y)
            fh = fhat(x)
            violations += shape_violations(fhat)
            rows.append((np.abs(fh - fbar_x).max(), np.abs(fh - fx).max(), bias))
    return CellResult(n, K, bias, np.array(rows, dtype=float).reshape(-1, 3), violations)


def run_cells(config: ExperimentConfig, sigma: float | None = None) -> tuple[Truth, list[CellResult]]:
    truth = resolve_truth(config)
    grid = resolve_grid(config)
    sigma = config.sigma if sigma is None else sigma
    jobs = list(enumerate(grid))
    cells = parallel_map(
        lambda job: run_cell(truth, config.m, job[1][0], job[1][1], sigma, config.replicates, config.seed, job[0]), jobs
    )
    return truth, cells


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` on ``log x``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def stochastic_predictor(n: int, K: int) -> float:
    return math.sqrt(K * math.log(n) / n)


def ratio_records(exp: str, cells: list[CellResult], values: list[float]) -> list[ResultRecord]:
    """Observed error ratio between consecutive cells against the predicted ratio, within a factor of 2."""
    out = []
    for a, b, va, vb in zip(cells[:-1], cells[1:], values[:-1], values[1:]):
        predicted = stochastic_predictor(b.n, b.K) / stochastic_predictor(a.n, a.K)
        observed = vb / va
        inst = f"n={a.n}->{b.n};K={a.K}->{b.K}"
        out.append(info(exp, "stochastic-ratio", inst, observed, note=f"predicted {predicted:.6g}"))
        out.append(check(exp, "stochastic-ratio-factor", inst, abs(math.log(observed / predicted)), math.log(RATIO_FACTOR)))
    return out


def rate_experiment(kind: str, config: ExperimentConfig) -> list[ResultRecord]:
    """Run one of ``bias``, ``stochastic`` or ``total`` over the configured ``(n, K)`` cells.

    The slope of ``log error`` against ``log predictor`` is checked against 1
    (``K^-gamma`` for bias, ``sqrt(K log n / n)`` for the stochastic part, and
    their sum for total risk) with tolerance 0.3.  Needs at least 3 cells.
    """
    if kind not in ("bias", "stochastic", "total"):
        raise ValueError(f"unknown rate kind {kind!r}")
    if len(config.grids) < 3:
        raise ValueError("a slope needs at least 3 grid cells")
    sigma = 0.0 if kind == "bias" else config.sigma
    if kind != "bias" and sigma <= 0:
        raise ValueError("stochastic and total experiments need sigma > 0")
    truth, cells = run_cells(config, sigma)
    exp = f"{kind}-rate"
    return rate_records(exp, kind, truth, cells)


def rate_records(exp: str, kind: str, truth: Truth, cells: list[CellResult]) -> list[ResultRecord]:
    gamma = truth.gamma
    records: list[ResultRecord] = []
    if kind == "bias":
        values = [c.bias for c in cells]
        predictors = [c.K ** (-gamma) for c in cells]
    elif kind == "stochastic":
        values = [c.stochastic for c in cells]
        predictors = [stochastic_predictor(c.n, c.K) for c in cells]
    else:
        values = [c.total for c in cells]
        predictors = [c.K ** (-gamma) + stochastic_predictor(c.n, c.K) for c in cells]
    for c, v, p in zip(cells, values, predictors):
        inst = f"truth={truth.name};n={c.n};K={c.K}"
        records.append(info(exp, f"{kind}-error", inst, v, note=f"predictor {p:.6g}"))
        records.append(check(exp, "shape", inst, c.violations, 0.0))
        if kind != "bias":
            # triangle inequality per replicate: ||fhat - f|| <= ||f - fbar|| + ||fbar - fhat||
            gap = c.per_replicate[:, 1] - c.per_replicate[:, 2] - c.per_replicate[:, 0]
            records.append(check(exp, "decomposition", inst, float(gap.max()) if gap.size else 0.0, 1e-12))
    label = f"truth={truth.name};cells={len(cells)}"
    if any(v <= ZERO_ERROR for v in values):
        records.append(info(exp, "slope", label, 0.0, note="error vanishes in some cell; slope undefined"))
        records.append(check(exp, "zero-error", label, max(values), ZERO_ERROR))
        return records
    slope = loglog_slope(predictors, values)
    k_slope = loglog_slope([c.K for c in cells], values)
    # the predictor is an upper rate: decaying faster is consistent, slower is not
    note = "faster than predicted" if slope > 1.0 + SLOPE_TOL else "pre-asymptotic" if slope < 1.0 - SLOPE_TOL else ""
    records.append(info(exp, "slope-vs-K", label, k_slope))
    records.append(check(exp, "slope", label, 1.0 - slope, SLOPE_TOL, note=f"slope {slope:.6g}" + (f"; {note}" if note else "")))
    if kind == "stochastic":
        records += ratio_records(exp, cells, values)
    return records


def stochastic_ratio_experiment(config: ExperimentConfig) -> list[ResultRecord]:
    """Ratio check between consecutive cells; unlike ``rate_experiment`` this works with two cells."""
    if len(config.grids) < 2:
        raise ValueError("a ratio needs at least 2 grid cells")
    if config.sigma <= 0:
        raise ValueError("stochastic experiments need sigma > 0")
    truth, cells = run_cells(config)
    exp = "stochastic-rate"
    records: list[ResultRecord] = []
    for c in cells:
        inst = f"truth={truth.name};n={c.n};K={c.K}"
        records.append(info(exp, "stochastic-error", inst, c.stochastic, note=f"predictor {stochastic_predictor(c.n, c.K):.6g}"))
        records.append(check(exp, "shape", inst, c.violations, 0.0))
    records += ratio_records(exp, cells, [c.stochastic for c in cells])
    return records
