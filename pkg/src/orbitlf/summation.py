"""Compensated summation and ordered parallel maps.

Sums are correctly rounded via ``math.fsum`` (applied to real and imaginary
parts separately), so the result does not depend on how the terms were
partitioned across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def fsum_complex(values) -> complex:
    arr = np.asarray(values, dtype=complex).ravel()
    return complex(math.fsum(arr.real.tolist()), math.fsum(arr.imag.tolist()))


def fsum_real(values) -> float:
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def split_blocks(n: int, blocks: int) -> list[slice]:
    """Partition range(n) into at most ``blocks`` contiguous slices."""
    blocks = max(1, min(blocks, n)) if n else 1
    edges = np.linspace(0, n, blocks + 1).round().astype(int)
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def ordered_map(fn: Callable[[T], R], items: Sequence[T] | Iterable[T], workers: int = 1) -> list[R]:
    """Map ``fn`` over ``items`` with a thread pool, keeping input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def blockwise_terms(fn: Callable[[slice], np.ndarray], n: int, workers: int = 1) -> np.ndarray:
    """Evaluate term arrays over a fixed partition of range(n) and concatenate them."""
    parts = ordered_map(fn, split_blocks(n, workers), workers)
    if not parts:
        return np.zeros(0, dtype=complex)
    return np.concatenate(parts)
