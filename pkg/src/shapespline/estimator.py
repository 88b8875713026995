"""Shape-constrained spline regression estimator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import numpy.typing as npt

from .qp import solve_qp
from .shapeops import ActiveSet, is_shape_feasible, weighted_difference
from .splines import DesignPoints, KnotSequence, basis_matrix, build_design_system

FloatArray = npt.NDArray[np.float64]

DEFAULT_GRID = 1001


@dataclass(frozen=True, eq=False)
class FitResult:
    """Fitted spline ``sum_k b_k B_{m,k}``; call it to evaluate on ``[0, 1]``."""

    coefficients: FloatArray
    knots: KnotSequence
    m: int
    active: ActiveSet

    def __call__(self, x) -> FloatArray:
        return basis_matrix(self.m, self.knots, x) @ self.coefficients

    def fitted(self, x) -> FloatArray:
        return self(x)


@dataclass(frozen=True)
class HolderSpec:
    r: float
    L: float

    def __post_init__(self) -> None:
        if self.r <= 0 or self.L <= 0:
            raise ValueError("Holder exponent and constant must be positive")

    @property
    def m(self) -> int:
        return int(np.ceil(self.r))

    @property
    def gamma(self) -> float:
        return self.r - (self.m - 1)


def _as_knots(knots: KnotSequence | int) -> KnotSequence:
    return KnotSequence.uniform(knots) if isinstance(knots, (int, np.integer)) else knots


def _as_design(design: DesignPoints | npt.ArrayLike) -> DesignPoints:
    # mesh constants are derived from the data, so user designs never fail the class check
    return design if isinstance(design, DesignPoints) else DesignPoints(design)


def fit(m: int, knots: KnotSequence | int, design: DesignPoints | npt.ArrayLike, y) -> FitResult:
    """Least-squares spline of order ``m`` whose (m-1)-th derivative is nondecreasing.

    ``knots`` may be an integer ``K`` for uniform knots.  ``design`` holds the
    sample locations ``0 = x_0 < ... < x_n = 1``.
    """
    knots = _as_knots(knots)
    design = _as_design(design)
    system = build_design_system(m, knots, design, y)
    sol = solve_qp(system, weighted_difference(m, knots))
    return FitResult(sol.b_hat, knots, m, sol.active)


def project_noise_free(m: int, knots: KnotSequence | int, design: DesignPoints | npt.ArrayLike, f_values) -> FitResult:
    """Constrained projection of noiseless values; the reference point for bias."""
    return fit(m, knots, design, f_values)


def sup_error(result: FitResult, f: Callable[[FloatArray], FloatArray], grid_size: int = DEFAULT_GRID) -> float:
    """``max |fit(x) - f(x)|`` over ``grid_size`` equally spaced points in ``[0, 1]``."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    x = np.linspace(0.0, 1.0, grid_size)
    return float(np.abs(result(x) - np.asarray(f(x), dtype=float)).max())


def shape_violations(result: FitResult, grid_size: int = DEFAULT_GRID) -> int:
    """Count of failed shape checks: coefficient test plus grid monotonicity or convexity."""
    bad = 0 if is_shape_feasible(result.m, result.knots, result.coefficients) else 1
    x = np.linspace(0.0, 1.0, grid_size)
    v = result(x)
    if result.m == 1:
        bad += int(np.sum(np.diff(v) < -1e-9))
    elif result.m == 2:
        bad += int(np.sum(np.diff(v, 2) < -1e-6))
    return bad
