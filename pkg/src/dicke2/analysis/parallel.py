"""Ordered parallel map over independent work items."""

from __future__ import annotations

import os
import sys
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "DICKE2_WORKERS"


def resolve_workers(requested: int | None = None, configured: int | None = None) -> int:
    """Worker count: explicit request, then ``DICKE2_WORKERS``, then the configured
    value, then 1."""
    for v in (requested, os.environ.get(WORKERS_ENV), configured):
        if v not in (None, ""):
            n = int(v)
            if n < 1:
                raise ValueError(f"worker count must be >= 1, got {n}")
            return n
    return 1


def ordered_map(func, items, workers: int = 1, progress: bool = False, chunksize: int | None = None):
    """``[func(it) for it in items]``, optionally across processes.

    Results come back in input order irrespective of completion order, so
    output is identical for any worker count.
    """
    items = list(items)
    total = len(items)
    out = []
    if workers <= 1 or total <= 1:
        it = map(func, items)
        pool = None
    else:
        chunksize = chunksize or max(1, total // (workers * 8))
        pool = ProcessPoolExecutor(max_workers=workers)
        it = pool.map(func, items, chunksize=chunksize)
    try:
        step = max(1, total // 20)
        for i, r in enumerate(it, 1):
            out.append(r)
            if progress and (i % step == 0 or i == total):
                print(f"\r{i}/{total}", end="" if i < total else "\n", file=sys.stderr, flush=True)
    finally:
        if pool is not None:
            pool.shutdown()
    return out
