"""Deterministic thread-pool map capped by ``SUPEROPT_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("SUPEROPT_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    """``[fn(x) for x in items]``, run on up to ``SUPEROPT_THREADS`` threads; order preserved."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
