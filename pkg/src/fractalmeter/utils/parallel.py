# src/fractalmeter/utils/parallel.py

"""
Ordered thread-pool map.

FRACTALMETER_THREADS caps the number of workers (default: cpu count,
1 runs inline). Results always come back in input order.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar


logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

ENV_THREADS = "FRACTALMETER_THREADS"


def thread_count() -> int:
    raw = os.environ.get(ENV_THREADS, "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        logger.warning("ignoring %s=%r (not an integer)", ENV_THREADS, raw)
        return os.cpu_count() or 1
    return max(n, 1)


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
