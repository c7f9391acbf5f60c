"""Thread pool helpers for independent evaluations (per k, per probe point)."""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

THREADS_ENV = "ZEROSPHERE_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    """Worker cap from ZEROSPHERE_THREADS (0, absent or invalid = all cores)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    try:
        requested = int(raw) if raw else 0
    except ValueError:
        requested = 0
    cores = os.cpu_count() or 1
    return cores if requested <= 0 else min(requested, cores)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> list[R]:
    """Map fn over items in input order, on a thread pool when more than one worker is allowed.

    Results never depend on the worker count.
    """
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
