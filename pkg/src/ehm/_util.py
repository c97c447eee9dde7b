from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


class NumericalContractError(RuntimeError):
    """A numerical invariant that should hold by construction was violated."""


def jit(fn):
    try:
        import numba
    except ImportError:  # pragma: no cover
        return fn
    return numba.njit(cache=True)(fn)


def thread_count(threads: int | None = None) -> int:
    if threads:
        return max(1, int(threads))
    env = os.environ.get("EHM_THREADS")
    return max(1, int(env)) if env else 1


def parallel_map(fn, items, threads: int | None = None) -> list:
    """Order-preserving map; results are assembled in input order."""
    items = list(items)
    n = thread_count(threads)
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
