"""B-spline bases on clamped knot sequences in [0, 1] and the weighted design system.

Indexing follows the usual 1-based convention for knots: ``kappa(j)`` is the
j-th knot, with the clamped extension ``kappa(j) = 0`` for ``j < 0`` and
``kappa(j) = 1`` for ``j > K``.  Basis functions of order ``p`` are numbered
``k = 1 .. K + p - 1`` and stored in column ``k - 1``; the support of
``B_{p,k}`` is ``[kappa(k - p), kappa(k)]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .errors import ConditioningError, DomainError, MeshError

ArrayLike = npt.ArrayLike
FloatArray = npt.NDArray[np.float64]

_MESH_RTOL = 1e-12


class KnotSequence:
    """Strictly increasing knots ``0 = kappa_0 < ... < kappa_K = 1``.

    Parameters
    ----------
    interior : array_like
        The ``K + 1`` knots including both endpoints.
    c_kappa_1, c_kappa_2 : float, optional
        Mesh constants of the class ``c1/K <= gap <= c2/K``.  When omitted
        the tightest admissible values are derived from the gaps.  When given,
        membership is checked unless ``check_mesh`` is false.
    check_mesh : bool
        Set to ``False`` for derived sequences (for example subsampled knots)
        that are exempt from the mesh bounds.
    """

    def __init__(
        self,
        interior: ArrayLike,
        c_kappa_1: float | None = None,
        c_kappa_2: float | None = None,
        *,
        check_mesh: bool = True,
    ) -> None:
        kappa = np.array(interior, dtype=float)
        if kappa.ndim != 1 or kappa.size < 2:
            raise ValueError("a knot sequence needs at least two knots")
        if kappa[0] != 0.0 or kappa[-1] != 1.0:
            raise ValueError("knots must start at 0 and end at 1")
        gaps = np.diff(kappa)
        if np.any(gaps <= 0):
            raise ValueError("knots must be strictly increasing")
        K = kappa.size - 1
        c1_tight = min(1.0, K * float(gaps.min()))
        c2_tight = max(1.0, K * float(gaps.max()))
        c1 = c1_tight if c_kappa_1 is None else float(c_kappa_1)
        c2 = c2_tight if c_kappa_2 is None else float(c_kappa_2)
        if not (0.0 < c1 <= 1.0 <= c2):
            raise ValueError(f"mesh constants need 0 < c_kappa_1 <= 1 <= c_kappa_2, got {c1}, {c2}")
        if check_mesh and (
            c1_tight < c1 * (1 - _MESH_RTOL) or c2_tight > c2 * (1 + _MESH_RTOL)
        ):
            raise MeshError(
                f"knot gaps lie in [{gaps.min():.6g}, {gaps.max():.6g}], outside "
                f"[{c1 / K:.6g}, {c2 / K:.6g}] implied by c_kappa_1={c1}, c_kappa_2={c2}"
            )
        kappa.setflags(write=False)
        self._kappa = kappa
        self.c_kappa_1 = c1
        self.c_kappa_2 = c2

    @classmethod
    def uniform(cls, K: int) -> KnotSequence:
        if K < 1:
            raise ValueError("K must be at least 1")
        kappa = np.arange(K + 1) / K
        return cls(kappa, 1.0, 1.0)

    @property
    def interior(self) -> FloatArray:
        return self._kappa

    @property
    def K(self) -> int:
        return self._kappa.size - 1

    def kappa(self, j):
        """Knot ``kappa_j`` under the clamped extension (vectorised over ``j``)."""
        j = np.asarray(j)
        return self._kappa[np.clip(j, 0, self.K)]

    def extended(self, p: int) -> FloatArray:
        """Clamped knot vector ``kappa_{1-p} .. kappa_{K+p-1}`` for order ``p``."""
        return self.kappa(np.arange(1 - p, self.K + p))

    def interval_index(self, x: ArrayLike) -> npt.NDArray[np.intp]:
        """1-based ``r`` with ``kappa_{r-1} <= x < kappa_r``; ``x = 1`` maps to ``K``."""
        x = np.asarray(x, dtype=float)
        r = np.searchsorted(self._kappa, x, side="right")
        return np.clip(r, 1, self.K)

    def __len__(self) -> int:
        return self._kappa.size

    def __repr__(self) -> str:
        return f"KnotSequence(K={self.K}, c_kappa_1={self.c_kappa_1:.4g}, c_kappa_2={self.c_kappa_2:.4g})"


class DesignPoints:
    """Design points ``0 = x_0 < ... < x_n = 1`` with left-rule weights.

    The weight of ``x_i`` is ``x_{i+1} - x_i`` with ``x_{n+1} := 1``, so the
    last point carries zero weight.
    """

    def __init__(self, points: ArrayLike, c_omega: float | None = None, *, check_mesh: bool = True) -> None:
        x = np.array(points, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("need at least two design points")
        if x[0] != 0.0 or x[-1] != 1.0:
            raise ValueError("design points must start at 0 and end at 1")
        gaps = np.diff(x)
        if np.any(gaps <= 0):
            raise ValueError("design points must be strictly increasing")
        n = x.size - 1
        tight = max(1.0, n * float(gaps.max()))
        c = tight if c_omega is None else float(c_omega)
        if c < 1.0:
            raise ValueError("c_omega must be at least 1")
        if check_mesh and tight > c * (1 + _MESH_RTOL):
            raise MeshError(f"largest design gap {gaps.max():.6g} exceeds c_omega/n = {c / n:.6g}")
        x.setflags(write=False)
        self._x = x
        self.c_omega = c

    @classmethod
    def uniform(cls, n: int) -> DesignPoints:
        return cls(np.arange(n + 1) / n, 1.0)

    @property
    def points(self) -> FloatArray:
        return self._x

    @property
    def n(self) -> int:
        return self._x.size - 1

    @property
    def weights(self) -> FloatArray:
        return np.diff(np.append(self._x, 1.0))

    def __len__(self) -> int:
        return self._x.size

    def __repr__(self) -> str:
        return f"DesignPoints(n={self.n}, c_omega={self.c_omega:.4g})"


def _check_order(p: int, minimum: int = 1) -> int:
    if int(p) != p or p < minimum:
        raise ValueError(f"spline order must be an integer >= {minimum}, got {p}")
    return int(p)


def _check_domain(x: FloatArray) -> None:
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("evaluation points must lie in [0, 1]")


def basis_matrix(p: int, knots: KnotSequence, x: ArrayLike) -> FloatArray:
    """All order-``p`` B-splines at each point of ``x``.

    Returns an array of shape ``(len(x), K + p - 1)``.  Uses the triangular
    recursion restricted to the ``p`` functions that are nonzero on the knot
    interval containing each point, so the remaining entries are exact zeros.
    """
    p = _check_order(p)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_domain(x)
    r = knots.interval_index(x)
    N = x.size
    values = np.zeros((N, p))
    values[:, 0] = 1.0
    right = np.empty((N, p))
    left = np.empty((N, p))
    for j in range(1, p):
        right[:, j] = knots.kappa(r - 1 + j) - x
        left[:, j] = x - knots.kappa(r - j)
        saved = np.zeros(N)
        for i in range(j):
            # dividing the weights rather than the value keeps clamped endpoints exactly 1
            den = right[:, i + 1] + left[:, j - i]
            v = values[:, i].copy()
            values[:, i] = saved + (right[:, i + 1] / den) * v
            saved = (left[:, j - i] / den) * v
        values[:, j] = saved
    out = np.zeros((N, knots.K + p - 1))
    cols = (r - 1)[:, None] + np.arange(p)[None, :]
    out[np.arange(N)[:, None], cols] = values
    return out


def eval_basis(p: int, knots: KnotSequence, x: float) -> FloatArray:
    """``(B_{p,1}(x), ..., B_{p,K+p-1}(x))`` at a single point."""
    return basis_matrix(p, knots, [x])[0]


def basis_derivative_matrix(p: int, knots: KnotSequence, x: ArrayLike) -> FloatArray:
    """Derivatives of the order-``p`` B-splines at each point of ``x``.

    At a knot where a derivative jumps the right limit is returned (the left
    limit at ``x = 1``).
    """
    p = _check_order(p, minimum=2)
    lower = basis_matrix(p - 1, knots, x)
    n_basis = knots.K + p - 1
    k = np.arange(1, n_basis + 1)
    out = np.zeros((lower.shape[0], n_basis))
    # rising part: (p-1)/(kappa_{k-1} - kappa_{k-p}) * B_{p-1,k-1}, absent for k = 1
    den = knots.kappa(k[1:] - 1) - knots.kappa(k[1:] - p)
    scale = np.divide(p - 1, den, out=np.zeros_like(den), where=den > 0)
    out[:, 1:] += scale * lower
    # falling part: (p-1)/(kappa_k - kappa_{k-p+1}) * B_{p-1,k}, absent for k = K+p-1
    den = knots.kappa(k[:-1]) - knots.kappa(k[:-1] - p + 1)
    scale = np.divide(p - 1, den, out=np.zeros_like(den), where=den > 0)
    out[:, :-1] -= scale * lower
    return out


def eval_basis_derivative(p: int, knots: KnotSequence, x: float) -> FloatArray:
    return basis_derivative_matrix(p, knots, [x])[0]


def l1_norm(p: int, knots: KnotSequence, k: int) -> float:
    """L1 norm ``(kappa_k - kappa_{k-p}) / p`` of ``B_{p,k}``."""
    p = _check_order(p)
    if not 1 <= k <= knots.K + p - 1:
        raise ValueError(f"basis index {k} outside 1..{knots.K + p - 1}")
    return float(knots.kappa(k) - knots.kappa(k - p)) / p


def l1_norms(p: int, knots: KnotSequence) -> FloatArray:
    k = np.arange(1, knots.K + p)
    return (knots.kappa(k) - knots.kappa(k - p)) / p


def gauss_nodes(p: int, knots: KnotSequence, npts: int | None = None) -> tuple[FloatArray, FloatArray]:
    """Gauss-Legendre nodes and weights on every knot interval.

    ``npts`` defaults to ``p`` which integrates piecewise polynomials of
    degree ``2p - 1`` exactly, enough for products of two order-``p`` splines.
    """
    npts = p if npts is None else npts
    g, w = np.polynomial.legendre.leggauss(npts)
    a = knots.interior[:-1, None]
    h = np.diff(knots.interior)[:, None]
    nodes = a + 0.5 * h * (g[None, :] + 1.0)
    weights = 0.5 * h * w[None, :]
    return nodes.ravel(), weights.ravel()


def inner_products(p: int, knots: KnotSequence) -> FloatArray:
    """Exact ``<B_{p,i}, B_{p,j}>`` for all pairs, by per-interval quadrature."""
    nodes, weights = gauss_nodes(p, knots)
    B = basis_matrix(p, knots, nodes)
    return (B * weights[:, None]).T @ B


@dataclass(frozen=True, eq=False)
class DesignSystem:
    """Weighted least-squares system for the spline coefficients.

    ``Lambda = K * Xhat' Theta Xhat`` and ``ybar = K * Xhat' Theta y``.
    """

    m: int
    knots: KnotSequence
    design: DesignPoints
    Xhat: FloatArray
    weights: FloatArray
    Lambda: FloatArray
    ybar: FloatArray

    @property
    def Theta(self) -> FloatArray:
        return np.diag(self.weights)

    @property
    def T(self) -> int:
        return self.Xhat.shape[1]

    def weighted_samples(self, y: ArrayLike) -> FloatArray:
        """``K * Xhat' Theta y`` for another sample vector on the same design."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.design.n + 1,):
            raise ValueError(f"expected {self.design.n + 1} samples, got shape {y.shape}")
        return self.knots.K * (self.Xhat.T @ (self.weights * y))


def build_design_system(m: int, knots: KnotSequence, design: DesignPoints, y: ArrayLike) -> DesignSystem:
    """Assemble ``Xhat``, ``Theta``, ``Lambda`` and ``ybar`` from data.

    Raises
    ------
    ConditioningError
        If ``Lambda`` is numerically singular, which happens when some knot
        intervals hold too few design points.
    """
    m = _check_order(m)
    y = np.asarray(y, dtype=float)
    if y.shape != (design.n + 1,):
        raise ValueError(f"expected {design.n + 1} samples, got shape {y.shape}")
    Xhat = basis_matrix(m, knots, design.points)
    w = design.weights
    K = knots.K
    Lambda = K * (Xhat.T @ (w[:, None] * Xhat))
    Lambda = 0.5 * (Lambda + Lambda.T)
    lam_min = float(np.linalg.eigvalsh(Lambda)[0])
    if lam_min < 1e-12 * float(np.trace(Lambda)):
        raise ConditioningError(
            f"Lambda is numerically singular (smallest eigenvalue {lam_min:.3g}); "
            "use more design points per knot interval"
        )
    ybar = K * (Xhat.T @ (w * y))
    return DesignSystem(m, knots, design, Xhat, w, Lambda, ybar)


def greville(m: int, knots: KnotSequence) -> FloatArray:
    """Greville abscissae; coefficients of a linear function are its values there."""
    m = _check_order(m)
    if m == 1:
        k = np.arange(1, knots.K + 1)
        return 0.5 * (knots.kappa(k - 1) + knots.kappa(k))
    k = np.arange(1, knots.K + m)
    offsets = np.arange(1, m)
    return knots.kappa(k[:, None] - m + offsets[None, :]).mean(axis=1)


def spline_values(m: int, knots: KnotSequence, coefficients: ArrayLike, x: ArrayLike) -> FloatArray:
    return basis_matrix(m, knots, x) @ np.asarray(coefficients, dtype=float)


def ceil_ratio(num: float, den: float) -> int:
    """``ceil(num / den)`` that ignores last-ulp noise in the quotient."""
    q = num / den
    return int(math.ceil(q - 1e-9 * max(1.0, abs(q))))
