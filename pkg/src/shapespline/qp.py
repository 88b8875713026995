"""The shape-constrained quadratic program and its piecewise-linear solution map.

The program is ``min 0.5 b' Lambda b - b' ybar`` subject to ``D b >= 0`` where
``D`` is the final stage of the weighted difference operator.  Two solvers are
provided: a primal active-set method (``solve_qp``) that never touches the
null-space bases, and an exhaustive enumeration over active sets
(``brute_force_qp``) built on them.  Agreement of the two is the main
correctness check for both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import ConditioningError, CyclingError, InconsistencyError
from .rng import Stream
from .shapeops import ActiveSet, DifferenceOperator, all_active_sets, build_F, weighted_difference
from .splines import DesignSystem, KnotSequence

FloatArray = npt.NDArray[np.float64]

PRIMAL_TOL = 1e-10
DUAL_TOL = 1e-11
MAX_BRUTE_FORCE_CONSTRAINTS = 16


@dataclass(frozen=True, eq=False)
class QpSolution:
    b_hat: FloatArray
    chi: FloatArray
    active: ActiveSet
    kkt_residual: float
    objective: float
    iterations: int = 0


@dataclass(frozen=True, eq=False)
class LinearPiece:
    """Linear map ``ybar -> b_hat`` on the face with active set ``alpha``.

    ``factors`` are the three norms whose product bounds ``inf_norm``:
    ``||F'||``, ``||K (Xi F Lambda F')^{-1}||`` and ``||Xi F / K||``.
    """

    alpha: ActiveSet
    map: FloatArray
    inf_norm: float
    factors: tuple[float, float, float]

    @property
    def factor_bound(self) -> float:
        a, b, c = self.factors
        return a * b * c


def objective(Lambda: FloatArray, ybar: FloatArray, b: FloatArray) -> float:
    return float(0.5 * b @ Lambda @ b - b @ ybar)


def kkt_report(Lambda: FloatArray, D: FloatArray, ybar: FloatArray, b: FloatArray, chi: FloatArray) -> dict:
    """Primal, dual, complementarity and stationarity residuals of a candidate."""
    slack = D @ b
    return {
        "primal": float(-min(0.0, slack.min())) if slack.size else 0.0,
        "dual": float(-min(0.0, chi.min())) if chi.size else 0.0,
        "complementarity": float(abs(chi @ slack)),
        "stationarity": float(np.abs(Lambda @ b - ybar - D.T @ chi).max()),
    }


def satisfies_kkt(Lambda: FloatArray, D: FloatArray, ybar: FloatArray, sol: QpSolution) -> bool:
    r = kkt_report(Lambda, D, ybar, sol.b_hat, sol.chi)
    ymax = float(np.abs(ybar).max()) if ybar.size else 0.0
    return (
        r["primal"] <= 1e-10
        and r["dual"] <= 1e-10
        and r["complementarity"] <= 1e-8
        and r["stationarity"] <= 1e-8 * (1.0 + ymax)
    )


def _require_pd(Lambda: FloatArray):
    try:
        return cho_factor(Lambda)
    except LinAlgError as exc:
        raise ConditioningError("Lambda is not positive definite") from exc


def _solve_face(Lambda: FloatArray, ybar: FloatArray, A: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Minimiser over ``{A b = 0}`` and its multipliers, from the dense KKT system."""
    T = Lambda.shape[0]
    r = A.shape[0]
    if r == 0:
        return np.linalg.solve(Lambda, ybar), np.zeros(0)
    kkt = np.zeros((T + r, T + r))
    kkt[:T, :T] = Lambda
    kkt[:T, T:] = -A.T
    kkt[T:, :T] = A
    rhs = np.concatenate((ybar, np.zeros(r)))
    sol = np.linalg.solve(kkt, rhs)
    return sol[:T], sol[T:]


def _ybar_of(system: DesignSystem, ybar) -> FloatArray:
    y = system.ybar if ybar is None else np.asarray(ybar, dtype=float)
    if y.shape != (system.T,):
        raise ValueError(f"ybar must have {system.T} entries, got shape {y.shape}")
    return y


def solve_qp(system: DesignSystem, diffop: DifferenceOperator | None = None, ybar=None) -> QpSolution:
    """Primal active-set method started from the face where every constraint is active.

    That face holds the polynomials of degree below ``m``, so the start is
    feasible.  Each iteration either drops the constraint with the most
    negative multiplier or moves towards the face minimiser until the first
    blocking constraint, which is then added.  Ties go to the smallest index.
    """
    Lambda = system.Lambda
    y = _ybar_of(system, ybar)
    diffop = weighted_difference(system.m, system.knots) if diffop is None else diffop
    D = diffop.final
    K = system.knots.K
    _require_pd(Lambda)
    n_con = D.shape[0]
    d_norm = float(np.abs(D).sum(axis=1).max()) if n_con else 0.0
    dual_tol = DUAL_TOL * (1.0 + float(np.abs(y).max()))
    cap = 10 * 2 ** min(K - 1, 20)

    working = np.ones(n_con, dtype=bool)
    b, mult = _solve_face(Lambda, y, D[working])
    iterations = 0
    while True:
        iterations += 1
        if iterations > cap:
            raise CyclingError(f"active-set iteration cap {cap} reached")
        target, mult = _solve_face(Lambda, y, D[working])
        step = target - b
        if np.abs(step).max() <= 1e-13 * max(1.0, float(np.abs(target).max())):
            b = target
            if not mult.size or mult.min() >= -dual_tol:
                break
            idx = np.flatnonzero(working)
            worst = mult.min()
            drop = idx[np.flatnonzero(mult == worst)[0]]
            working[drop] = False
            continue
        act_tol = PRIMAL_TOL * d_norm * max(1.0, float(np.abs(b).max()))
        slope = D @ step
        slack = np.maximum(D @ b, 0.0)
        t_best = 1.0
        block = -1
        for i in np.flatnonzero(~working):
            if slope[i] < 0.0:
                t_i = 0.0 if slack[i] <= act_tol else slack[i] / -slope[i]
                if t_i < t_best:
                    t_best, block = t_i, i
        b = b + t_best * step
        if block >= 0:
            working[block] = True
        else:
            b = target

    chi = np.zeros(n_con)
    chi[working] = mult
    active = ActiveSet.from_mask(K, system.m, working)
    resid = float(np.abs(Lambda @ b - y - D.T @ chi).max()) if n_con else float(np.abs(Lambda @ b - y).max())
    return QpSolution(b, chi, active, resid, objective(Lambda, y, b), iterations)


def face_solution(F: FloatArray, Lambda: FloatArray, ybar: FloatArray) -> FloatArray:
    """``F' (F Lambda F')^{-1} F ybar``."""
    M = F @ Lambda @ F.T
    try:
        return F.T @ np.linalg.solve(M, F @ ybar)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("face matrix is singular") from exc


def brute_force_qp(system: DesignSystem, diffop: DifferenceOperator | None = None, ybar=None) -> QpSolution:
    """Solve the program by trying every active set and keeping the KKT point."""
    Lambda = system.Lambda
    y = _ybar_of(system, ybar)
    diffop = weighted_difference(system.m, system.knots) if diffop is None else diffop
    D = diffop.final
    K, m = system.knots.K, system.m
    if K - 1 > MAX_BRUTE_FORCE_CONSTRAINTS:
        raise ValueError(f"brute force needs K - 1 <= {MAX_BRUTE_FORCE_CONSTRAINTS}, got {K - 1}")
    _require_pd(Lambda)
    d_norm = float(np.abs(D).sum(axis=1).max()) if D.size else 0.0
    ymax = float(np.abs(y).max())
    best: QpSolution | None = None
    best_feasible = np.inf
    for alpha in all_active_sets(K, m):
        b = face_solution(build_F(alpha, m, system.knots).F, Lambda, y)
        obj = objective(Lambda, y, b)
        slack = D @ b
        if slack.size and slack.min() < -PRIMAL_TOL * max(1.0, d_norm * float(np.abs(b).max())):
            continue
        best_feasible = min(best_feasible, obj)
        grad = Lambda @ b - y
        chi = np.zeros(D.shape[0])
        mask = alpha.mask
        if mask.any():
            chi[mask] = np.linalg.lstsq(D[mask].T, grad, rcond=None)[0]
        resid = float(np.abs(grad - D.T @ chi).max())
        if resid > 1e-8 * (1.0 + ymax) or (chi.size and chi.min() < -1e-10):
            continue
        if best is None or obj < best.objective:
            best = QpSolution(b, chi, alpha, resid, obj)
    if best is None:
        raise InconsistencyError("no active set satisfies the KKT conditions")
    if best.objective > best_feasible + 1e-10 * (1.0 + abs(best_feasible)):
        raise InconsistencyError("KKT candidate is not the minimum over feasible candidates")
    return best


def linear_piece(alpha: ActiveSet, system: DesignSystem, m: int | None = None, knots: KnotSequence | None = None) -> LinearPiece:
    """Matrix of the solution map on the face ``alpha`` and its infinity norm."""
    m = system.m if m is None else m
    knots = system.knots if knots is None else knots
    fc = build_F(alpha, m, knots)
    F = fc.F
    Lambda = system.Lambda
    M = F @ Lambda @ F.T
    try:
        inner = np.linalg.solve(M, F)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("face matrix is singular") from exc
    mapping = F.T @ inner
    K = knots.K
    xi = fc.xi[-1]
    scaled = xi[:, None] * F
    try:
        middle = K * np.linalg.inv(scaled @ Lambda @ F.T)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("face matrix is singular") from exc
    factors = (
        float(np.abs(F.T).sum(axis=1).max()),
        float(np.abs(middle).sum(axis=1).max()),
        float(np.abs(scaled / K).sum(axis=1).max()),
    )
    return LinearPiece(alpha, mapping, float(np.abs(mapping).sum(axis=1).max()), factors)


def _realistic_ybar(system: DesignSystem, stream: Stream) -> FloatArray:
    # rough random-walk data breaks the shape constraint on many intervals
    n = system.design.n
    walk = np.cumsum(stream.normal(n + 1)) / np.sqrt(n + 1)
    return system.weighted_samples(walk)


def probe_lipschitz(system: DesignSystem, pairs: int = 10_000, seed: int = 0) -> float:
    """Largest observed ``||b(u) - b(v)|| / ||u - v||`` over random pairs (a lower bound)."""
    diffop = weighted_difference(system.m, system.knots)
    T = system.T
    stream = Stream(seed, 0x11F)
    best = 0.0
    half = pairs // 2
    for i in range(pairs):
        if i < half:
            u = stream.uniform(T, -1.0, 1.0)
            v = stream.uniform(T, -1.0, 1.0)
        else:
            base = _realistic_ybar(system, stream)
            u = base + 0.05 * stream.uniform(T, -1.0, 1.0)
            h = 10.0 ** stream.uniform(1, -4.0, 0.0)[0]
            v = u + h * stream.uniform(T, -1.0, 1.0)
        du = float(np.abs(u - v).max())
        if du == 0.0:
            continue
        bu = solve_qp(system, diffop, u).b_hat
        bv = solve_qp(system, diffop, v).b_hat
        best = max(best, float(np.abs(bu - bv).max()) / du)
    return best


def exact_lipschitz(system: DesignSystem) -> float:
    """Maximum infinity norm of the linear pieces over every active set."""
    K = system.knots.K
    if K - 1 > MAX_BRUTE_FORCE_CONSTRAINTS:
        raise ValueError(f"exact mode needs K - 1 <= {MAX_BRUTE_FORCE_CONSTRAINTS}, got {K - 1}")
    return max(linear_piece(a, system).inf_norm for a in all_active_sets(K, system.m))


def lipschitz_constant(
    system: DesignSystem,
    m: int | None = None,
    knots: KnotSequence | None = None,
    mode: str = "exact",
    *,
    seed: int = 0,
    pairs: int = 10_000,
) -> float:
    """Infinity-norm Lipschitz constant of ``ybar -> b_hat``.

    ``mode="exact"`` enumerates every face and is an upper bound;
    ``mode="probe"`` samples pairs and is a lower bound.
    """
    if (m is not None and m != system.m) or (knots is not None and knots is not system.knots):
        raise ValueError("m and knots must match the design system")
    if mode == "exact":
        return exact_lipschitz(system)
    if mode == "probe":
        return probe_lipschitz(system, pairs, seed)
    raise ValueError(f"unknown mode {mode!r}; use 'exact' or 'probe'")
