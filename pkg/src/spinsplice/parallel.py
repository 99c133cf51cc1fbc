"""Deterministic fan-out helper for independent evaluations."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """Apply fn to every item, reducing in input order regardless of worker count."""
    batch: Sequence[T] = list(items)
    if workers <= 1 or len(batch) <= 1:
        return [fn(x) for x in batch]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, batch))
