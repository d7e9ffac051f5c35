"""Order-preserving fan-out of row-wise work over a thread pool.

Rows are split into contiguous chunks and results concatenated in chunk
order, so output never depends on the worker count.
"""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_threads = None


def default_threads() -> int:
    if _threads is not None:
        return _threads
    env = os.environ.get("LCKLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def set_threads(n):
    """Set the process-wide worker count (``None`` restores env/default)."""
    global _threads
    _threads = None if n is None else max(1, int(n))


def map_rows(fn, Z, threads=None):
    """Apply ``fn`` (rows -> tuple of row-aligned arrays) to ``Z`` in chunks."""
    Z = np.atleast_2d(Z)
    threads = threads or default_threads()
    N = Z.shape[0]
    if threads <= 1 or N < 2 * threads:
        return fn(Z)
    edges = np.linspace(0, N, threads + 1).astype(int)
    chunks = [Z[a:b] for a, b in zip(edges[:-1], edges[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, chunks))
    return tuple(np.concatenate(col, axis=0) for col in zip(*parts))
