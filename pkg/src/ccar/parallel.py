"""Per-image parallelism helper; CCAR_THREADS caps the worker count."""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    env = os.environ.get("CCAR_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def parallel_map(fn, items):
    """Map over items, in order, with shared immutable model weights.

    Results are returned in input order so aggregation stays deterministic.
    """
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
