"""Counter-based random streams with a fixed, documented algorithm.

Each value is ``splitmix64(key + (i + 1) * 0x9E3779B97F4A7C15)`` for counter
``i``.  Uniforms take the top 53 bits; normals use Box-Muller on consecutive
uniform pairs ``(u1, u2)`` as ``sqrt(-2 log(1 - u1)) * (cos, sin)(2 pi u2)``.
Streams are keyed by a seed and a path of integers (cell index, replicate,
...), so a cell draws the same numbers whatever order cells run in.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def derive_key(seed: int, *path: int) -> int:
    """Stream key for ``seed`` and an integer path; order of ``path`` matters."""
    key = np.array([int(seed) & _MASK], dtype=np.uint64)
    for part in path:
        tag = np.array([(int(part) & _MASK)], dtype=np.uint64)
        key = _mix(key ^ _mix(tag + _GOLDEN))
    return int(key[0])


class Stream:
    """Sequential reader over one keyed counter stream."""

    def __init__(self, seed: int, *path: int) -> None:
        self.key = derive_key(seed, *path)
        self.counter = 0

    def _raw(self, count: int) -> np.ndarray:
        i = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
        self.counter += count
        return _mix(np.uint64(self.key) + i * _GOLDEN)

    def uniform(self, size: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        u = (self._raw(size) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return low + (high - low) * u

    def normal(self, size: int) -> np.ndarray:
        pairs = (size + 1) // 2
        u = self.uniform(2 * pairs)
        radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        angle = 2.0 * np.pi * u[1::2]
        z = np.empty(2 * pairs)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        return z[:size]

    def integers(self, low: int, high: int, size: int) -> np.ndarray:
        """Integers in ``[low, high)`` by scaling uniforms (bias below 2^-40 at desk sizes)."""
        span = high - low
        return low + np.minimum((self.uniform(size) * span).astype(np.int64), span - 1)

    def choice_mask(self, size: int, prob: float) -> np.ndarray:
        return self.uniform(size) < prob
