"""Certification suites for the matrix bounds behind the uniform Lipschitz property.

Every suite returns a list of ``ResultRecord`` in a fixed order.  Random
instances come from streams keyed by ``(seed, tag, cell...)`` so results do
not depend on thread count or scheduling.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeSplineError
from ..estimator import FitResult, shape_violations
from ..qp import brute_force_qp, exact_lipschitz, probe_lipschitz, satisfies_kkt, solve_qp
from ..rng import Stream
from ..shapeops import (
    ActiveSet,
    build_F,
    build_Z_H,
    gramian,
    inf_norm_of_inverse,
    f_norm_bound,
    limit_gramians,
    property_h_sequence,
    v_alpha_knots,
    weighted_difference,
    z_from_product,
)
from ..splines import DesignPoints, KnotSequence, basis_matrix, build_design_system, inner_products
from .catalog import random_active_set_mask, random_design, random_knots
from .config import ExperimentConfig, parallel_map
from .records import ResultRecord, check, failure, info

# stream tags keep suites that share a seed from drawing the same numbers
TAG_ORACLE, TAG_NULLSPACE, TAG_FINE_GRID, TAG_GRAMIAN, TAG_DESIGN, TAG_BOUNDS, TAG_LIPSCHITZ = range(1, 8)


def _alpha_label(alpha: ActiveSet) -> str:
    return "-".join(str(i) for i in alpha.alpha) or "none"


def _instance(**parts) -> str:
    return ";".join(f"{k}={v}" for k, v in parts.items())


def finite_check(experiment: str, statement: str, instance: str, value: float) -> ResultRecord:
    ok = math.isfinite(value)
    return ResultRecord(experiment, statement, instance, float(value), math.nan, math.nan, ok, "" if ok else "not finite")


def inf_norm(A: np.ndarray) -> float:
    return float(np.abs(A).sum(axis=1).max()) if A.size else 0.0


def grid_gramian_bound(m: int, c1: float, J: int) -> float:
    return 6.0 * c1 * (3 * 2 ** (m - 1) - 2) / J


def lambda_tilde_bound(m: int, c1: float, c2: float, J: int) -> float:
    return 6.0 * c2 * c1 * (3 * 2 ** (m - 1) - 2) / J


def design_gramian_bound(m: int, c_omega: float, c1: float, c2: float, K: int, n: int) -> float:
    return (2 * m - 1) * (6 * m**2 * c_omega * c2 / c1 + 3 * c_omega) * K / n


def fine_grid_bound(p: int, M: int, L: int) -> float:
    return 6.0 * (2 ** (p - 1) - 1) * M ** (p - 1) / L


def lipschitz_ceiling(m: int, rho: float, c1: float) -> float:
    return 9.0 * m * rho / (4.0 * c1)


# ---------------------------------------------------------------------------
# Null-space basis checks


def f_checks(exp: str, inst: str, alpha: ActiveSet, m: int, knots: KnotSequence, points: int = 200) -> list[ResultRecord]:
    """Null-space, B-spline identity, nonnegativity and norm checks for one ``F``."""
    out = []
    try:
        fc = build_F(alpha, m, knots)
        F = fc.F
        D = weighted_difference(m, knots).final
        resid = float(np.abs(D[alpha.mask] @ F.T).max()) if alpha.alpha else 0.0
        out.append(check(exp, "null-space", inst, resid, 1e-9))
        rank = np.linalg.matrix_rank(F)
        out.append(check(exp, "null-space-rank", inst, abs(rank - alpha.q_alpha), 0.0))
        x = np.linspace(0.0, 1.0, points)
        V = v_alpha_knots(alpha, knots)
        ident = float(np.abs(basis_matrix(m, knots, x) @ F.T - basis_matrix(m, V, x)).max())
        out.append(check(exp, "F-identity", inst, ident, 1e-9))
        out.append(check(exp, "F-nonnegative", inst, -float(F.min()), 1e-13))
        out.append(check(exp, "F-transpose-norm", inst, abs(inf_norm(F.T) - 1.0), 1e-10))
        K = knots.K
        out.append(check(exp, "XiF-norm", inst, inf_norm(fc.xi[-1][:, None] * F / K), m / knots.c_kappa_1 + 1e-10))
        out.append(check(exp, "F-norm", inst, inf_norm(F), f_norm_bound(m, knots)))
    except ShapeSplineError as exc:
        out.append(failure(exp, "null-space", inst, exc))
    return out


def null_space_suite(instances: int, seed: int, m_max: int = 4, k_max: int = 10, c1: float = 0.75, c2: float = 1.5) -> list[ResultRecord]:
    """Random ``(m, K, alpha, knots)`` instances through ``f_checks``."""

    def cell(i: int) -> list[ResultRecord]:
        s = Stream(seed, TAG_NULLSPACE, i)
        m = int(s.integers(1, m_max + 1, 1)[0])
        K = int(s.integers(2, k_max + 1, 1)[0])
        knots = random_knots(K, c1, c2, s)
        alpha = ActiveSet.from_mask(K, m, random_active_set_mask(K, s))
        inst = _instance(i=i, m=m, K=K, alpha=_alpha_label(alpha))
        return f_checks("null-space", inst, alpha, m, knots)

    return [r for rs in parallel_map(cell, range(instances)) for r in rs]


# ---------------------------------------------------------------------------
# Fine-grid matrices against B-splines


def z_checks(exp: str, inst: str, alpha: ActiveSet, m: int, knots: KnotSequence, J: int, max_l: int) -> list[ResultRecord]:
    """Entrywise distance of every ``Z_p`` to B-splines on the subsampled knots, plus the product cross-check."""
    try:
        L, M, _ = property_h_sequence(m, knots.c_kappa_1, knots.K, J, max_L=max_l)
    except ValueError as exc:
        return [info(exp, "grid-skipped", inst, math.nan, note=str(exc))]
    if L <= knots.K / knots.c_kappa_1:
        # only possible for m = 1, K = 1, J = 1 where the grid has a single point
        return [info(exp, "grid-skipped", inst, float(L), note="L <= K/c_kappa_1")]
    out = []
    zc = build_Z_H(alpha, m, knots, L)
    V = v_alpha_knots(alpha, knots)
    grid = np.arange(L) / L
    tag = f"{inst};L={L}"
    for p in range(1, m + 1):
        B = basis_matrix(p, V, grid)
        err = float(np.abs(zc.Z[p - 1][:, :L] - B.T).max())
        bound = 1e-14 if p == 1 else fine_grid_bound(p, M, L)
        out.append(check(exp, f"Z-bspline-p{p}", tag, err, bound))
    prod = z_from_product(alpha, m, knots, L)
    out.append(check(exp, "Z-product", tag, float(np.abs(prod - zc.Z[-1]).max()), 1e-9))
    return out


def fine_grid_suite(seed: int, m_max: int = 3, k_max: int = 6, j_list=(1, 2), alphas: int = 3, c1: float = 0.75, c2: float = 1.5, max_l: int = 2_000_000) -> list[ResultRecord]:
    """Exhaustive entrywise check for small ``(m, K, J)`` on uniform and random knots."""
    cells = [(m, K, J, kind) for m in range(1, m_max + 1) for K in range(1, k_max + 1) for J in j_list for kind in (0, 1)]

    def cell(spec) -> list[ResultRecord]:
        m, K, J, kind = spec
        s = Stream(seed, TAG_FINE_GRID, m, K, J, kind)
        knots = KnotSequence.uniform(K) if kind == 0 else random_knots(K, c1, c2, s)
        sets = [ActiveSet.empty(K, m), ActiveSet.full(K, m)]
        sets += [ActiveSet.from_mask(K, m, random_active_set_mask(K, s)) for _ in range(alphas)] if K > 1 else []
        out = []
        for a_idx, alpha in enumerate(sets):
            inst = _instance(m=m, K=K, J=J, knots="uniform" if kind == 0 else "random", a=a_idx, alpha=_alpha_label(alpha))
            out += z_checks("fine-grid", inst, alpha, m, knots, J, max_l)
        return out

    return [r for rs in parallel_map(cell, cells) for r in rs]


# ---------------------------------------------------------------------------
# Design-based Gramian against its limit


def design_gramian_suite(instances: int, seed: int, n: int = 512, K: int = 8, m_list=(1, 2, 3), c_omega: float = 2.0, c1: float = 0.75, c2: float = 1.5) -> list[ResultRecord]:
    """``||Lambda - Lambda_hat||`` for random designs and knots against its explicit bound."""

    def cell(i: int) -> list[ResultRecord]:
        s = Stream(seed, TAG_DESIGN, i)
        m = m_list[i % len(m_list)]
        knots = random_knots(K, c1, c2, s)
        design = random_design(n, c_omega, s)
        inst = _instance(i=i, m=m, n=n, K=K)
        try:
            sys = build_design_system(m, knots, design, np.zeros(n + 1))
        except ShapeSplineError as exc:
            return [failure("design-gramian", "Lambda-design", inst, exc)]
        lam_hat = knots.K * inner_products(m, knots)
        bound = design_gramian_bound(m, design.c_omega, knots.c_kappa_1, knots.c_kappa_2, K, n)
        return [check("design-gramian", "Lambda-design", inst, inf_norm(sys.Lambda - lam_hat), bound)]

    return [r for rs in parallel_map(cell, range(instances)) for r in rs]


# ---------------------------------------------------------------------------
# Solver oracle


def _oracle_instance(seed: int, i: int, m_choices, k_range, n_range):
    attempt = 0
    while True:
        s = Stream(seed, TAG_ORACLE, i, attempt)
        m = int(m_choices[int(s.integers(0, len(m_choices), 1)[0])])
        K = int(s.integers(k_range[0], k_range[1] + 1, 1)[0])
        n = int(s.integers(n_range[0], n_range[1] + 1, 1)[0])
        knots = random_knots(K, 0.75, 1.5, s)
        design = random_design(n, 2.0, s)
        x = design.points
        kind = int(s.integers(0, 3, 1)[0])
        if kind == 0:
            y = np.cumsum(s.normal(n + 1)) / math.sqrt(n + 1)
        elif kind == 1:
            y = np.sin(2 * math.pi * s.uniform(1, 0.5, 2.0)[0] * x) + 0.3 * s.normal(n + 1)
        else:
            y = x**m + 0.1 * s.normal(n + 1)
        try:
            return m, K, n, build_design_system(m, knots, design, y), attempt
        except ShapeSplineError:
            attempt += 1


def qp_oracle_suite(instances: int, seed: int, m_choices=(1, 2, 3), k_range=(3, 8), n_range=(16, 64)) -> list[ResultRecord]:
    """Active-set solver against exhaustive enumeration on random small problems."""

    def cell(i: int) -> list[ResultRecord]:
        m, K, n, sys, attempt = _oracle_instance(seed, i, m_choices, k_range, n_range)
        inst = _instance(i=i, m=m, K=K, n=n, redraws=attempt)
        diffop = weighted_difference(m, sys.knots)
        try:
            a = solve_qp(sys, diffop)
            b = brute_force_qp(sys, diffop)
        except ShapeSplineError as exc:
            return [failure("qp-oracle", "qp-oracle-coefficients", inst, exc)]
        fit = FitResult(a.b_hat, sys.knots, m, a.active)
        return [
            check("qp-oracle", "qp-oracle-coefficients", inst, float(np.abs(a.b_hat - b.b_hat).max()), 1e-8),
            check("qp-oracle", "qp-oracle-objective", inst, abs(a.objective - b.objective), 1e-10),
            check("qp-oracle", "kkt-active-set", inst, 0.0 if satisfies_kkt(sys.Lambda, diffop.final, sys.ybar, a) else 1.0, 0.0),
            check("qp-oracle", "kkt-brute-force", inst, 0.0 if satisfies_kkt(sys.Lambda, diffop.final, sys.ybar, b) else 1.0, 0.0),
            check("qp-oracle", "shape", inst, shape_violations(fit), 0.0),
        ]

    return [r for rs in parallel_map(cell, range(instances)) for r in rs]


# ---------------------------------------------------------------------------
# Gramians of subsampled knots


def gramian_sweep(
    m_list,
    K_list,
    samples_per_cell: int,
    seed: int,
    alphas: int = 20,
    c1: float = 0.5,
    c2: float = 2.0,
    cor3_K=(2, 3, 4),
    max_l: int = 200_000,
) -> tuple[list[ResultRecord], dict[int, float]]:
    """Empirical ``rho_m = max ||G^{-1}||`` over random knots and active sets.

    Also checks the plateau of the running maximum across ``K`` windows, the
    inverse bound for the fine-grid Gramian and the inverse bound for the
    scaled spline Gramian, all against the measured ``rho_m``.
    """
    exp = "gramian"
    K_list = sorted(set(int(k) for k in K_list))
    cells = [(m, K, s) for m in m_list for K in K_list for s in range(samples_per_cell)]

    def cell(spec):
        m, K, sample = spec
        s = Stream(seed, TAG_GRAMIAN, m, K, sample)
        knots = random_knots(K, c1, c2, s)
        values = []
        for a in range(alphas):
            alpha = ActiveSet.empty(K, m) if a == 0 else ActiveSet.from_mask(K, m, random_active_set_mask(K, s))
            try:
                values.append(gramian(alpha, m, knots).inv_inf_norm)
            except ShapeSplineError:
                values.append(math.inf)
        try:
            lam_inv = inf_norm_of_inverse(K * inner_products(m, knots))
        except ShapeSplineError:
            lam_inv = math.inf
        return m, K, sample, knots, values, lam_inv

    results = parallel_map(cell, cells)
    records: list[ResultRecord] = []
    rho: dict[int, float] = {}
    per_k: dict[tuple[int, int], float] = {}
    for m, K, sample, knots, values, _ in results:
        inst = _instance(m=m, K=K, knots=sample)
        worst = max(values)
        records.append(finite_check(exp, "gramian-inverse-finite", inst, worst))
        if m == 1:
            records.append(check(exp, "gramian-identity", inst, max(abs(v - 1.0) for v in values), 1e-10))
        rho[m] = max(rho.get(m, 0.0), worst)
        per_k[(m, K)] = max(per_k.get((m, K), 0.0), worst)
    for m in m_list:
        records.append(info(exp, "rho-hat", _instance(m=m), rho[m]))
        if len(K_list) >= 2:
            lo_k, hi_k = K_list[-2], K_list[-1]
            wide = max(v for (mm, K), v in per_k.items() if mm == m and K >= lo_k)
            narrow = max(v for (mm, K), v in per_k.items() if mm == m and K >= hi_k)
            records.append(check(exp, "rho-plateau", _instance(m=m, window_low=lo_k, window_high=hi_k), wide, 1.1 * narrow))
    for m, K, sample, knots, _, lam_inv in results:
        inst = _instance(m=m, K=K, knots=sample)
        records.append(check(exp, "Lambda-hat-inverse", inst, lam_inv, m * rho[m] / knots.c_kappa_1))
    for m in m_list:
        for K in cor3_K:
            s = Stream(seed, TAG_GRAMIAN, 0, m, K)
            for kind in (0, 1):
                knots = KnotSequence.uniform(K) if kind == 0 else random_knots(K, 0.75, 1.5, s)
                try:
                    L, _, J = property_h_sequence(m, knots.c_kappa_1, K, 1, max_L=max_l)
                except ValueError as exc:
                    inst = _instance(m=m, K=K, knots="uniform" if kind == 0 else "random")
                    records.append(info(exp, "grid-skipped", inst, math.nan, note=str(exc)))
                    continue
                alpha = ActiveSet.from_mask(K, m, random_active_set_mask(K, s))
                inst = _instance(m=m, K=K, knots="uniform" if kind == 0 else "random", alpha=_alpha_label(alpha), L=L)
                H = build_Z_H(alpha, m, knots, L).H
                xi = build_F(alpha, m, knots).xi[-1]
                approx = xi[:, None] * (H @ H.T) / L
                try:
                    records.append(check(exp, "grid-gramian-inverse", inst, inf_norm_of_inverse(approx), 1.5 * rho[m]))
                except ShapeSplineError as exc:
                    records.append(failure(exp, "grid-gramian-inverse", inst, exc))
                G = gramian(alpha, m, knots).G
                records.append(check(exp, "grid-gramian-error", inst, inf_norm(G - approx), grid_gramian_bound(m, knots.c_kappa_1, J)))
                lam_hat, lam_tilde = limit_gramians(m, knots, L)
                records.append(
                    check(exp, "Lambda-tilde", inst, inf_norm(lam_tilde - lam_hat), lambda_tilde_bound(m, knots.c_kappa_1, knots.c_kappa_2, J))
                )
    return records, rho


# ---------------------------------------------------------------------------
# Combined bound suite


def run_bound_suite(config: ExperimentConfig) -> list[ResultRecord]:
    """Every matrix bound for one order ``m`` and ``K = 1..max_k``.

    Each ``(K, sample)`` cell uses uniform knots for sample 0 and random
    knots with the configured mesh constants otherwise.  Fine-grid checks run
    only when the fine grid size is at most ``config.max_l``.  Design
    cells in ``config.grids`` add the design-Gramian check.
    """
    seed = config.require_seed()
    m = config.m
    if config.max_k > 12 or m > 4:
        raise ValueError("the bound suite is limited to m <= 4 and K <= 12")
    exp = "bounds"
    cells = [(K, s) for K in range(1, config.max_k + 1) for s in range(config.samples)]

    def cell(spec) -> list[ResultRecord]:
        K, sample = spec
        s = Stream(seed, TAG_BOUNDS, m, K, sample)
        knots = KnotSequence.uniform(K) if sample == 0 else random_knots(K, config.c_kappa_1, config.c_kappa_2, s)
        alpha = ActiveSet.from_mask(K, m, random_active_set_mask(K, s)) if K > 1 else ActiveSet.empty(K, m)
        inst = _instance(m=m, K=K, knots=sample, alpha=_alpha_label(alpha))
        out = f_checks(exp, inst, alpha, m, knots)
        for J in config.j_list:
            out += z_checks(exp, f"{inst};J={J}", alpha, m, knots, J, config.max_l)
            try:
                L, _, _ = property_h_sequence(m, knots.c_kappa_1, K, J, max_L=config.max_l)
            except ValueError:
                continue
            if L <= K / knots.c_kappa_1:
                continue
            H = build_Z_H(alpha, m, knots, L).H
            xi = build_F(alpha, m, knots).xi[-1]
            G = gramian(alpha, m, knots).G
            approx = xi[:, None] * (H @ H.T) / L
            tag = f"{inst};J={J};L={L}"
            out.append(check(exp, "grid-gramian-error", tag, inf_norm(G - approx), grid_gramian_bound(m, knots.c_kappa_1, J)))
            lam_hat, lam_tilde = limit_gramians(m, knots, L)
            out.append(
                check(exp, "Lambda-tilde", tag, inf_norm(lam_tilde - lam_hat), lambda_tilde_bound(m, knots.c_kappa_1, knots.c_kappa_2, J))
            )
        return out

    records = [r for rs in parallel_map(cell, cells) for r in rs]
    for idx, (n, K) in enumerate(config.grids):
        K = K or config.max_k
        records += [
            ResultRecord(r.experiment, r.statement, f"grid={idx};{r.instance}", r.measured, r.bound, r.margin, r.passed, r.note)
            for r in design_gramian_suite(
                config.samples, seed + idx, n, K, (m,), config.c_omega, config.c_kappa_1, config.c_kappa_2
            )
        ]
    return records


# ---------------------------------------------------------------------------
# Lipschitz constants of the solution map


def estimate_rho(m: int, seed: int, K_list=(8, 16), samples: int = 6, alphas: int = 10) -> float:
    """Quick measured ``rho_m`` for the Lipschitz ceiling when none is supplied."""
    _, rho = gramian_sweep([m], K_list, samples, seed, alphas=alphas, cor3_K=())
    return rho[m]


def lipschitz_cell(m: int, n: int, K: int, mesh: int, seed: int, config: ExperimentConfig):
    """Design system for one sweep cell; ``mesh = 0`` is the uniform mesh."""
    s = Stream(seed, TAG_LIPSCHITZ, m, n, K, mesh)
    if mesh == 0:
        knots, design = KnotSequence.uniform(K), DesignPoints.uniform(n)
    else:
        knots = random_knots(K, config.c_kappa_1, config.c_kappa_2, s)
        design = random_design(n, config.c_omega, s)
    return build_design_system(m, knots, design, np.zeros(n + 1))


def lipschitz_sweep(config: ExperimentConfig) -> tuple[list[ResultRecord], dict]:
    """Exact and probed Lipschitz constants over ``(n, K)`` cells and mesh draws.

    ``config.samples`` mesh draws per cell; draw 0 is uniform.  Uniform-mesh
    constants at a fixed ``K`` are checked for a plateau across ``n``.
    """
    seed = config.require_seed()
    m = config.m
    exp = "lipschitz"
    for n, K in config.grids:
        if K == 0 or K - 1 > 8:
            raise ValueError("exact Lipschitz constants need an explicit K <= 9 in every grid cell")
    rho = config.rho if config.rho is not None else estimate_rho(m, seed)
    cells = [(n, K, mesh) for n, K in config.grids for mesh in range(config.samples)]

    def cell(spec):
        n, K, mesh = spec
        inst = _instance(m=m, n=n, K=K, mesh=mesh)
        try:
            sys = lipschitz_cell(m, n, K, mesh, seed, config)
            exact = exact_lipschitz(sys)
            probe = probe_lipschitz(sys, config.pairs, seed=seed + 7919 * (mesh + 1))
        except ShapeSplineError as exc:
            return spec, None, None, [failure(exp, "probe-below-exact", inst, exc)], 1.0
        out = [
            info(exp, "exact-constant", inst, exact),
            info(exp, "probe-constant", inst, probe),
            check(exp, "probe-below-exact", inst, probe, exact + 1e-6),
            check(
                exp,
                "lipschitz-ceiling",
                inst,
                exact,
                1.5 * lipschitz_ceiling(m, rho, sys.knots.c_kappa_1),
                note="ceiling uses measured rho with slack 0.5",
            ),
        ]
        return spec, exact, probe, out, sys.knots.c_kappa_1

    results = parallel_map(cell, cells)
    records = [r for _, _, _, rs, _ in results for r in rs]
    by_k: dict[int, list[float]] = {}
    for (n, K, mesh), exact, _, _, _ in results:
        if mesh == 0 and exact is not None:
            by_k.setdefault(K, []).append(exact)
    for K, vals in sorted(by_k.items()):
        if len(vals) >= 2:
            records.append(check(exp, "lipschitz-plateau", _instance(m=m, K=K), max(vals) / min(vals) - 1.0, 0.1))
    return records, {"rho_hat": rho}
