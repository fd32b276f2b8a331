"""Optional thread fan-out for independent per-subgroup work."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "FLASQUE_KIT_THREADS"


def thread_count() -> int:
    raw = os.environ.get(ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def fanout(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """map(fn, items) with results in input order."""
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
