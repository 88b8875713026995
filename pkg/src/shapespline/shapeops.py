"""Constraint and analysis matrices for shape-constrained splines.

Contains the weighted difference operators whose last stage encodes the shape
constraint, the null-space basis ``F`` of an active face, the discretisation
matrices ``X`` and ``Z`` that link ``F`` to B-splines on a fine grid, and the
L1-normalised Gramians of the subsampled knot sequence.

Index convention: every 1-based mathematical index ``i`` lives at storage
position ``i - 1``.  Knots are always read through ``KnotSequence.kappa`` so
the clamped extension is applied in one place.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import numpy.typing as npt

from .errors import ConditioningError
from .splines import KnotSequence, basis_matrix, ceil_ratio, inner_products, l1_norms

FloatArray = npt.NDArray[np.float64]

F_SNAP = 1e-13
FEASIBILITY_TOL = 1e-10
DEFAULT_MAX_L = 4_000_000


@dataclass(frozen=True)
class ActiveSet:
    """Index set ``alpha`` of active shape constraints, a subset of ``{1..K-1}``."""

    K: int
    m: int
    alpha: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        alpha = tuple(sorted(int(i) for i in self.alpha))
        if len(set(alpha)) != len(alpha):
            raise ValueError("active set has repeated indices")
        if alpha and (alpha[0] < 1 or alpha[-1] > self.K - 1):
            raise ValueError(f"active indices must lie in 1..{self.K - 1}")
        if self.m < 1 or self.K < 1:
            raise ValueError("need K >= 1 and m >= 1")
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def from_complement(cls, K: int, m: int, complement) -> ActiveSet:
        keep = set(int(i) for i in complement)
        return cls(K, m, tuple(i for i in range(1, K) if i not in keep))

    @classmethod
    def from_mask(cls, K: int, m: int, mask) -> ActiveSet:
        mask = np.asarray(mask, dtype=bool)
        return cls(K, m, tuple(int(i) + 1 for i in np.flatnonzero(mask)))

    @classmethod
    def empty(cls, K: int, m: int) -> ActiveSet:
        return cls(K, m, ())

    @classmethod
    def full(cls, K: int, m: int) -> ActiveSet:
        return cls(K, m, tuple(range(1, K)))

    @property
    def complement(self) -> tuple[int, ...]:
        active = set(self.alpha)
        return tuple(i for i in range(1, self.K) if i not in active)

    @property
    def q_alpha(self) -> int:
        return len(self.complement) + self.m

    @property
    def mask(self) -> npt.NDArray[np.bool_]:
        out = np.zeros(self.K - 1, dtype=bool)
        out[np.asarray(self.alpha, dtype=int) - 1] = True
        return out


def all_active_sets(K: int, m: int):
    """Every subset of ``{1..K-1}``, in order of size then lexicographically."""
    idx = range(1, K)
    for size in range(K):
        for alpha in combinations(idx, size):
            yield ActiveSet(K, m, alpha)


def first_difference(k: int) -> FloatArray:
    """``k x (k+1)`` matrix whose row ``i`` maps ``v`` to ``v[i+1] - v[i]``."""
    if int(k) != k or k < 1:
        raise ValueError(f"difference size must be a positive integer, got {k}")
    D = np.zeros((k, k + 1))
    i = np.arange(k)
    D[i, i] = -1.0
    D[i, i + 1] = 1.0
    return D


def delta_diagonal(p: int, knots: KnotSequence) -> FloatArray:
    """Diagonal of ``Delta_p``: ``(kappa_i - kappa_{i-p}) / p`` for ``i = 1..K+p-1``."""
    if p == 0:
        return np.ones(knots.K - 1)
    i = np.arange(1, knots.K + p)
    return (knots.kappa(i) - knots.kappa(i - p)) / p


def delta_matrix(p: int, knots: KnotSequence) -> FloatArray:
    """``Delta_p`` as a dense diagonal matrix; ``p = 0`` gives the identity of order ``K - 1``."""
    if int(p) != p or p < 0:
        raise ValueError(f"delta_matrix needs p >= 0, got {p}")
    return np.diag(delta_diagonal(int(p), knots))


@dataclass(frozen=True, eq=False)
class DifferenceOperator:
    """Stages ``D_0 = I, D_1, ..., D_m`` of the knot-weighted difference operator.

    ``stages[p]`` has shape ``(K + m - 1 - p, K + m - 1)``.  ``D_m b >= 0`` is
    the shape constraint and ``D_j b`` are the coefficients of the j-th
    derivative in the order ``m - j`` basis.
    """

    m: int
    knots: KnotSequence
    stages: tuple[FloatArray, ...]

    @property
    def final(self) -> FloatArray:
        return self.stages[self.m]

    @property
    def T(self) -> int:
        return self.knots.K + self.m - 1


def weighted_difference(m: int, knots: KnotSequence) -> DifferenceOperator:
    if int(m) != m or m < 1:
        raise ValueError(f"order must be a positive integer, got {m}")
    T = knots.K + m - 1
    stages = [np.eye(T)]
    for p in range(1, m + 1):
        scale = 1.0 / delta_diagonal(m - p, knots)
        diff = first_difference(T - p) if T > p else np.zeros((0, 1))  # K = 1 has no constraints
        stages.append(scale[:, None] * (diff @ stages[-1]))
    for s in stages:
        s.setflags(write=False)
    return DifferenceOperator(m, knots, tuple(stages))


def _check_coeffs(m: int, knots: KnotSequence, b) -> FloatArray:
    b = np.asarray(b, dtype=float)
    if b.shape != (knots.K + m - 1,):
        raise ValueError(f"expected {knots.K + m - 1} coefficients, got shape {b.shape}")
    return b


def is_shape_feasible(m: int, knots: KnotSequence, b, tol: float = FEASIBILITY_TOL) -> bool:
    b = _check_coeffs(m, knots, b)
    return bool(np.all(weighted_difference(m, knots).final @ b >= -tol))


def derivative_coeffs(m: int, knots: KnotSequence, b, j: int) -> FloatArray:
    """Coefficients of the j-th derivative of ``sum b_k B_{m,k}`` in the order ``m - j`` basis."""
    b = _check_coeffs(m, knots, b)
    if not 0 <= j <= m - 1:
        raise ValueError(f"derivative order must lie in 0..{m - 1}, got {j}")
    return weighted_difference(m, knots).stages[j] @ b


# ---------------------------------------------------------------------------
# Null-space basis of an active face


def tau_values(alpha: ActiveSet, knots: KnotSequence, k) -> FloatArray:
    """``tau_k``: 0 for ``k <= 0``, ``kappa_{i_k}`` inside, 1 beyond the complement."""
    comp = np.asarray(alpha.complement, dtype=int)
    inner = np.concatenate(([0.0], knots.kappa(comp), [1.0]))
    k = np.asarray(k)
    return inner[np.clip(k, 0, comp.size + 1)]


def tau_knots(alpha: ActiveSet, knots: KnotSequence) -> FloatArray:
    """Extended vector ``tau_{1-m} .. tau_{q_alpha}``."""
    return tau_values(alpha, knots, np.arange(1 - alpha.m, alpha.q_alpha + 1))


def v_alpha_knots(alpha: ActiveSet, knots: KnotSequence) -> KnotSequence:
    """Knots ``{0, kappa_{i_1}, ..., 1}`` kept by the complement of ``alpha``."""
    comp = np.asarray(alpha.complement, dtype=int)
    values = np.concatenate(([0.0], knots.kappa(comp), [1.0]))
    return KnotSequence(values, check_mesh=False)


def upper_ones(r: int) -> FloatArray:
    """Upper-triangular matrix of ones; right multiplication is a running sum."""
    return np.triu(np.ones((r, r)))


def upper_difference(r: int) -> FloatArray:
    """Inverse of ``upper_ones(r)``: ones on the diagonal, minus ones above it."""
    return np.eye(r) - np.eye(r, k=1)


def _running_sum_cols(A: FloatArray) -> FloatArray:
    # A @ upper_ones(A.shape[1])
    return np.cumsum(A, axis=1)


def _difference_rows(A: FloatArray) -> FloatArray:
    # upper_difference(A.shape[0]) @ A
    out = A.copy()
    out[:-1] -= A[1:]
    return out


def xi_diagonal(alpha: ActiveSet, knots: KnotSequence, p: int) -> FloatArray:
    """Diagonal of ``Xi^(p)``: ``m - p`` ones then ``p / (tau_k - tau_{k-p})``."""
    m = alpha.m
    k = np.arange(1, alpha.q_alpha - m + p + 1)
    return np.concatenate((np.ones(m - p), p / (tau_values(alpha, knots, k) - tau_values(alpha, knots, k - p))))


def delta_hat_diagonal(m: int, knots: KnotSequence, p: int) -> FloatArray:
    """Diagonal of ``Delta_p`` padded with ``m - p`` leading ones to order ``K + m - 1``."""
    if p == 0:
        return np.ones(knots.K + m - 1)
    i = np.arange(1, knots.K + p)
    return np.concatenate((np.ones(m - p), (knots.kappa(i) - knots.kappa(i - p)) / p))


def group_matrix(alpha: ActiveSet) -> FloatArray:
    """``E_alpha``: row k sums the knot intervals between consecutive kept knots."""
    K = alpha.K
    cuts = np.concatenate(([0], np.asarray(alpha.complement, dtype=int), [K]))
    E = np.zeros((cuts.size - 1, K))
    for row, (lo, hi) in enumerate(zip(cuts[:-1], cuts[1:])):
        E[row, lo:hi] = 1.0
    return E


def _block_identity(lead: int, block: FloatArray) -> FloatArray:
    r, c = block.shape
    out = np.zeros((lead + r, lead + c))
    out[:lead, :lead] = np.eye(lead)
    out[lead:, lead:] = block
    return out


@dataclass(frozen=True, eq=False)
class FConstruction:
    """Result of ``build_F``: ``stages[p-1]`` holds ``F^(p)`` and ``xi[p-1]`` the diagonal of ``Xi^(p)``."""

    alpha: ActiveSet
    knots: KnotSequence
    stages: tuple[FloatArray, ...]
    xi: tuple[FloatArray, ...]
    delta_hat: tuple[FloatArray, ...]

    @property
    def F(self) -> FloatArray:
        return self.stages[-1]

    @property
    def m(self) -> int:
        return self.alpha.m


def build_F(alpha: ActiveSet, m: int, knots: KnotSequence) -> FConstruction:
    """Full-row-rank ``q_alpha x (K+m-1)`` basis ``F`` with ``(D_m)_alpha F' = 0``.

    The rows of ``F`` are the coefficients, in the original basis, of the
    order-``m`` B-splines on the subsampled knots.  Entries of magnitude below
    ``1e-13`` in the final stage are snapped to zero.
    """
    if alpha.m != m or alpha.K != knots.K:
        raise ValueError("active set does not match (K, m)")
    E = group_matrix(alpha)
    F = _block_identity(m - 1, E)
    stages = [F]
    xis = [xi_diagonal(alpha, knots, p) for p in range(1, m + 1)]
    deltas = [delta_hat_diagonal(m, knots, p) for p in range(0, m)]
    for p in range(2, m + 1):
        G = xis[p - 2][:, None] * stages[-1] * deltas[p - 1][None, :]
        stages.append(_difference_rows(_running_sum_cols(G)))
    final = stages[-1].copy()
    final[np.abs(final) < F_SNAP] = 0.0
    stages[-1] = final
    return FConstruction(alpha, knots, tuple(stages), tuple(xis), tuple(deltas))


def f_norm_bound(m: int, knots: KnotSequence) -> float:
    """Upper bound on ``||F^(m)||_inf`` valid for every active set."""
    K = knots.K
    T = K + m - 1
    base = 2 * m / knots.c_kappa_1 * max(1.0, knots.c_kappa_2 / K) * T
    return float(base ** (m - 1) * K**m)


# ---------------------------------------------------------------------------
# Fine-grid discretisation


def _check_grid(knots: KnotSequence, L: int) -> int:
    if int(L) != L or L <= knots.K / knots.c_kappa_1:
        raise ValueError(
            f"grid size L={L} must be an integer exceeding K/c_kappa_1 = {knots.K / knots.c_kappa_1:.6g}"
        )
    return int(L)


def grid_indicator(knots: KnotSequence, L: int) -> FloatArray:
    """``K x L`` matrix whose row j flags grid points ``(l-1)/L`` in ``[kappa_{j-1}, kappa_j)``."""
    L = _check_grid(knots, L)
    grid = np.arange(L) / L
    r = np.searchsorted(knots.interior, grid, side="right")
    E = np.zeros((knots.K, L))
    E[r - 1, np.arange(L)] = 1.0
    return E


def build_X(m: int, knots: KnotSequence, L: int) -> tuple[FloatArray, ...]:
    """Matrices ``X_1 .. X_m``, each of shape ``(K+m-1) x (L+m-1)``."""
    L = _check_grid(knots, L)
    X = _block_identity(m - 1, grid_indicator(knots, L))
    out = [X]
    for p in range(2, m + 1):
        gamma = np.concatenate((np.ones(m - p + 1), np.full(L + p - 2, 1.0 / L)))
        A = (1.0 / delta_hat_diagonal(m, knots, p - 1))[:, None] * out[-1] * gamma[None, :]
        out.append(_difference_rows(_running_sum_cols(A)))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class ZConstruction:
    """``Z[p-1]`` is ``Z_p`` of shape ``(|complement| + p) x (L + p - 1)``; ``H`` truncates ``Z_m``."""

    alpha: ActiveSet
    L: int
    Z: tuple[FloatArray, ...]

    @property
    def H(self) -> FloatArray:
        return self.Z[-1][:, : self.L]


def build_Z_H(alpha: ActiveSet, m: int, knots: KnotSequence, L: int) -> ZConstruction:
    """Entrywise recursion for ``Z_p``, starting from ``Z_1 = E_alpha * grid_indicator``."""
    L = _check_grid(knots, L)
    if alpha.m != m or alpha.K != knots.K:
        raise ValueError("active set does not match (K, m)")
    Z = group_matrix(alpha) @ grid_indicator(knots, L)
    out = [Z]
    nbar = len(alpha.complement)
    for p in range(2, m + 1):
        prev = out[-1]
        rows = nbar + p
        # C[:, k-1] = sum_{l < k} prev[:, l-1]
        C = np.zeros((prev.shape[0], L + p - 1))
        np.cumsum(prev, axis=1, out=C[:, 1:])
        j = np.arange(1, rows + 1)
        # rise is unused for j = 1 and fall for j = rows; their spans may be empty
        with np.errstate(divide="ignore"):
            rise = (p - 1) / (L * (tau_values(alpha, knots, j - 1) - tau_values(alpha, knots, j - p)))
            fall = (p - 1) / (L * (tau_values(alpha, knots, j) - tau_values(alpha, knots, j - p + 1)))
        Zp = np.zeros((rows, L + p - 1))
        Zp[0] = 1.0 - fall[0] * C[0]
        Zp[1:-1] = rise[1:-1, None] * C[:-1][: rows - 2] - fall[1:-1, None] * C[1:][: rows - 2]
        Zp[-1] = rise[-1] * C[-1]
        Zp[1:, 0] = 0.0
        Zp[0, 0] = 1.0
        out.append(Zp)
    return ZConstruction(alpha, L, tuple(out))


def z_from_product(alpha: ActiveSet, m: int, knots: KnotSequence, L: int) -> FloatArray:
    """``F^(m) X_m`` computed by dense products; equals ``Z_m`` from the recursion."""
    return build_F(alpha, m, knots).F @ build_X(m, knots, L)[-1]


# ---------------------------------------------------------------------------
# Gramians


@dataclass(frozen=True, eq=False)
class GramianReport:
    G: FloatArray
    inv_inf_norm: float


def inf_norm_of_inverse(A: FloatArray) -> float:
    """``||A^{-1}||_inf`` from a dense solve against the identity."""
    try:
        inv = np.linalg.solve(A, np.eye(A.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("matrix is singular") from exc
    value = float(np.abs(inv).sum(axis=1).max())
    if not np.isfinite(value):
        raise ConditioningError("inverse has non-finite entries")
    return value


def normalized_gramian(m: int, knots: KnotSequence) -> FloatArray:
    """``<B_i, B_j> / ||B_i||_1`` for the order-``m`` basis on ``knots``."""
    return inner_products(m, knots) / l1_norms(m, knots)[:, None]


def gramian(alpha: ActiveSet, m: int, knots: KnotSequence) -> GramianReport:
    """L1-normalised Gramian of the order-``m`` B-splines on the subsampled knots."""
    G = normalized_gramian(m, v_alpha_knots(alpha, knots))
    return GramianReport(G, inf_norm_of_inverse(G))


def limit_gramians(m: int, knots: KnotSequence, L: int) -> tuple[FloatArray, FloatArray]:
    """``(Lambda_hat, Lambda_tilde)``: exact scaled Gramian and its fine-grid approximation."""
    K = knots.K
    lam_hat = K * inner_products(m, knots)
    Xm = build_X(m, knots, L)[-1][:, :L]
    lam_tilde = (K / L) * (Xm @ Xm.T)
    return lam_hat, lam_tilde


def property_h_sequence(
    m: int, c_kappa_1: float, K: int, J: int, max_L: int = DEFAULT_MAX_L
) -> tuple[int, int, int]:
    """``(L, M, J)`` with ``M = ceil(m K / c_kappa_1)`` and ``L = J M^(m+1)``."""
    if K < 1 or J < 1:
        raise ValueError("K and J must be positive")
    if not 0 < c_kappa_1 <= 1:
        raise ValueError("c_kappa_1 must lie in (0, 1]")
    M = ceil_ratio(m * K, c_kappa_1)
    L = J * M ** (m + 1)
    if L > max_L:
        raise ValueError(f"grid size L={L} exceeds the limit {max_L}; use a smaller K or J")
    return L, M, J


def bandwidth(A: FloatArray, tol: float = 0.0) -> int:
    """Smallest ``w`` with ``A[i, j] == 0`` whenever ``|i - j| >= w``."""
    i, j = np.nonzero(np.abs(A) > tol)
    if i.size == 0:
        return 0
    return int(np.abs(i - j).max()) + 1


def sample_at_grid(m: int, knots: KnotSequence, L: int) -> FloatArray:
    """Order-``m`` basis at the grid points ``(l-1)/L``, shape ``L x (K+m-1)``."""
    return basis_matrix(m, knots, np.arange(L) / L)
