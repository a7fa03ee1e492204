"""Ordered thread-pool map used by the verifiers; results keep input order."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def default_threads() -> int:
    return os.cpu_count() or 1


def ordered_map(fn, items, threads: int | None = 1) -> list:
    """``[fn(x) for x in items]``, run on ``threads`` workers (``None`` = all cores)."""
    items = list(items)
    threads = default_threads() if threads is None else max(int(threads), 1)
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
