"""Small shared helpers (worker pool sizing, ordered parallel map)."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "ARRAYSYNTH_THREADS"


def worker_count() -> int:
    """Number of workers for grid-partitioned evaluations.

    ``ARRAYSYNTH_THREADS`` caps the count; when absent the count is chosen
    automatically (bounded, since numpy already threads its kernels).
    """
    env = os.environ.get(ENV_THREADS)
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            n = 1
        return max(1, n)
    return max(1, min(4, os.cpu_count() or 1))


def ordered_parallel_map(fn, items, workers: int | None = None) -> list:
    """Map ``fn`` over ``items`` preserving input order in the results."""
    if workers is None:
        workers = worker_count()
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
