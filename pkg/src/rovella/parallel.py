"""Chunked task execution with thread-count-independent results.

Work is split into a fixed number of index chunks; each chunk writes only
to its own slots and draws only from its own random streams, so raising
or lowering the worker count never changes an output byte.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

DEFAULT_CHUNKS = 64


def chunk_bounds(n_items: int, n_chunks: int = DEFAULT_CHUNKS):
    """Contiguous [start, stop) ranges covering range(n_items)."""
    n_chunks = max(1, min(n_chunks, n_items))
    step = n_items // n_chunks
    rem = n_items % n_chunks
    bounds = []
    start = 0
    for i in range(n_chunks):
        stop = start + step + (1 if i < rem else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def run_chunked(worker, n_items: int, threads: int = 1,
                n_chunks: int = DEFAULT_CHUNKS) -> None:
    """Call worker(start, stop) over fixed chunks, possibly in parallel.

    The worker must only touch state owned by its index range (numba
    kernels here release the GIL, so threads give real parallelism).
    """
    bounds = chunk_bounds(n_items, n_chunks)
    if threads <= 1:
        for start, stop in bounds:
            worker(start, stop)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, a, b) for a, b in bounds]
        for f in futures:
            f.result()
