"""Experiment configuration, key-value config files and the worker pool."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

KINDS = ("bounds", "gramian-sweep", "lipschitz-sweep", "bias-rate", "stochastic-rate", "total-risk")


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters shared by every suite; each suite reads the fields it needs.

    ``grids`` holds ``(n, K)`` pairs.  A pair with ``K = 0`` takes ``K`` from
    the schedule ``ceil((n / log n)^(1/q))``.
    """

    kind: str
    m: int = 2
    seed: int | None = None
    grids: tuple[tuple[int, int], ...] = ()
    replicates: int = 1
    c_omega: float = 2.0
    c_kappa_1: float = 0.75
    c_kappa_2: float = 1.5
    sigma: float = 0.0
    truth: str = ""
    samples: int = 4
    max_k: int = 6
    m_list: tuple[int, ...] = ()
    k_list: tuple[int, ...] = ()
    alphas: int = 20
    pairs: int = 10_000
    q: float = 3.0
    max_l: int = 200_000
    j_list: tuple[int, ...] = (1,)
    rho: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        for n, K in self.grids:
            if n < 1 or K < 0 or (K and K >= n):
                raise ValueError(f"grid cell (n={n}, K={K}) needs 0 < K < n")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0 < self.c_kappa_1 <= 1 <= self.c_kappa_2:
            raise ValueError("need 0 < c_kappa_1 <= 1 <= c_kappa_2")
        if self.c_omega < 1:
            raise ValueError("c_omega must be at least 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grids"] = [list(g) for g in self.grids]
        return d

    def require_seed(self) -> int:
        if self.seed is None:
            raise ValueError("a seed is required for this experiment")
        return int(self.seed)


def config_field_names() -> set[str]:
    return {f.name for f in fields(ExperimentConfig)}


def parse_key_value(text: str, source: str = "config") -> dict[str, tuple[str, int]]:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Returns ``{key: (value, line)}``."""
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"{source}:{lineno}: missing key")
        key = key.replace("-", "_")
        if key in out:
            raise ValueError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = (value, lineno)
    return out


def thread_count() -> int:
    """Worker cap from ``SHAPESPLINE_THREADS``, else the machine's CPU count."""
    raw = os.environ.get("SHAPESPLINE_THREADS", "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"SHAPESPLINE_THREADS must be a positive integer, got {raw!r}") from None
        if value < 1:
            raise ValueError(f"SHAPESPLINE_THREADS must be a positive integer, got {raw!r}")
        return value
    return os.cpu_count() or 1


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """``[fn(x) for x in items]`` evaluated on up to ``thread_count()`` threads, in input order."""
    items = list(items)
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
