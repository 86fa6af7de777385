"""Chunked node evaluation with an optional thread cap.

Results are concatenated in node order, so reductions over them stay
deterministic regardless of the thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import thread_count

CHUNK = 512


def map_nodes(fn, nodes: np.ndarray, threads: int | None = None):
    """Apply ``fn`` to row chunks of ``nodes`` and concatenate the outputs.

    ``fn`` may return an array or a tuple of arrays (each concatenated along
    axis 0).
    """
    nodes = np.asarray(nodes, dtype=float)
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(nodes) <= CHUNK:
        return fn(nodes)
    chunks = [nodes[i:i + CHUNK] for i in range(0, len(nodes), CHUNK)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, chunks))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(col, axis=0) for col in zip(*parts))
    return np.concatenate(parts, axis=0)
