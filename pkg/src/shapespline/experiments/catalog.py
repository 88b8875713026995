"""Truth functions with known smoothness, mesh samplers and the data model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..estimator import HolderSpec
from ..rng import Stream
from ..splines import DesignPoints, KnotSequence


@dataclass(frozen=True)
class Truth:
    """Regression function in the shape class of order ``m`` with Holder exponent ``r`` and constant ``L``."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    m: int
    r: float
    L: float
    formula: str

    @property
    def holder(self) -> HolderSpec:
        return HolderSpec(self.r, self.L)

    @property
    def gamma(self) -> float:
        return self.holder.gamma

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))


_E = math.e

TRUTHS: dict[str, Truth] = {
    t.name: t
    for t in (
        Truth("linear", lambda x: x, 1, 1.0, 1.0, "x"),
        Truth("ramp", lambda x: np.minimum(2.0 * x, 0.5 + 0.5 * x), 1, 1.0, 2.0, "min(2x, 0.5 + x/2)"),
        Truth("sqrt", np.sqrt, 1, 0.5, 1.0, "sqrt(x)"),
        Truth("quadratic", lambda x: x**2, 2, 2.0, 2.0, "x^2"),
        Truth("exp", lambda x: np.expm1(x) / (_E - 1.0), 2, 2.0, _E / (_E - 1.0), "(e^x - 1)/(e - 1)"),
        Truth("cubic", lambda x: x**3, 3, 3.0, 6.0, "x^3"),
    )
}


def get_truth(name: str) -> Truth:
    try:
        return TRUTHS[name]
    except KeyError:
        raise ValueError(f"unknown truth {name!r}; choose from {', '.join(TRUTHS)}") from None


def default_truth(m: int) -> Truth:
    return {1: TRUTHS["linear"], 2: TRUTHS["quadratic"], 3: TRUTHS["cubic"]}.get(m, TRUTHS["cubic"])


def random_knots(K: int, c1: float, c2: float, stream: Stream, tries: int = 50) -> KnotSequence:
    """Knots with gaps in ``[c1/K, c2/K]``.

    Gaps are drawn uniformly in that band and rescaled to sum to one; a draw
    that the rescaling pushes out of the band is rejected.  When ``tries``
    draws all fail (typical for large ``K``) the gaps are drawn from the
    narrower band ``[1, beta]`` with ``beta = min(c2, 1/c1)``, which rescaling
    can never push outside ``[c1/K, c2/K]``.
    """
    if K == 1 or c1 == c2:
        return KnotSequence(np.linspace(0.0, 1.0, K + 1), c1, c2)
    for _ in range(tries):
        gaps = stream.uniform(K, c1 / K, c2 / K)
        gaps /= gaps.sum()
        if gaps.min() >= c1 / K and gaps.max() <= c2 / K:
            return _from_gaps(gaps, c1, c2)
    beta = min(c2, 1.0 / c1)
    gaps = stream.uniform(K, 1.0, beta)
    return _from_gaps(gaps / gaps.sum(), c1, c2)


def _from_gaps(gaps: np.ndarray, c1: float, c2: float) -> KnotSequence:
    kappa = np.concatenate(([0.0], np.cumsum(gaps)))
    kappa[-1] = 1.0
    # the cumulative sum may drift by an ulp; clip the tight constants to the declared ones
    knots = KnotSequence(kappa, check_mesh=False)
    c1 = min(c1, knots.c_kappa_1)
    c2 = max(c2, knots.c_kappa_2)
    return KnotSequence(kappa, c1, c2)


def random_design(n: int, c_omega: float, stream: Stream) -> DesignPoints:
    """Design with relative gaps uniform in ``[1, c_omega]``; every gap is at most ``c_omega/n``."""
    if c_omega == 1.0:
        return DesignPoints.uniform(n)
    u = stream.uniform(n, 1.0, c_omega)
    x = np.concatenate(([0.0], np.cumsum(u / u.sum())))
    x[-1] = 1.0
    tight = DesignPoints(x, check_mesh=False).c_omega
    return DesignPoints(x, max(c_omega, tight))


def random_active_set_mask(K: int, stream: Stream) -> np.ndarray:
    """Active-constraint mask whose density is itself random, so sparse and dense sets both occur."""
    density = stream.uniform(1)[0]
    return stream.uniform(K - 1) < density


def knot_schedule(n: int, q: float) -> int:
    """``K = ceil((n / log n)^(1/q))``."""
    return max(1, math.ceil((n / math.log(n)) ** (1.0 / q) - 1e-12))


def simulate_model(truth, design: DesignPoints, sigma: float, seed: int, *path: int) -> np.ndarray:
    """``y_i = f(x_i) + sigma * z_i`` with ``z`` from the stream keyed by ``(seed, *path)``."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    x = design.points
    fx = np.asarray(truth(x), dtype=float)
    if sigma == 0:
        return fx.copy()
    return fx + sigma * Stream(seed, *path).normal(x.size)
