"""Row-block worker pool.

Work is cut into fixed-height row blocks independent of the worker count,
and block results are stitched back in row order, so the output does not
depend on how many threads ran or in which order blocks finished.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

THREADS_ENV = "FRINGEFORGE_THREADS"
ROW_BLOCK = 64

BlockResult = Union[np.ndarray, Tuple[np.ndarray, ...]]


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning("Ignoring non-integer %s=%r", THREADS_ENV, raw)
    return max(1, os.cpu_count() or 1)


def row_blocks(height: int, block: int = ROW_BLOCK) -> List[slice]:
    return [slice(start, min(start + block, height)) for start in range(0, height, block)]


def map_rows(
    kernel: Callable[[slice], BlockResult],
    height: int,
    threads: Optional[int] = None,
) -> BlockResult:
    """Run kernel(rows) over every row block and concatenate along axis 0.

    The kernel returns an array (or tuple of arrays) whose first axis spans
    the rows of its block.
    """
    blocks = row_blocks(height)
    threads = worker_count() if threads is None else max(1, int(threads))
    if threads == 1 or len(blocks) <= 1:
        results = [kernel(rows) for rows in blocks]
    else:
        with ThreadPoolExecutor(max_workers=min(threads, len(blocks))) as pool:
            results = list(pool.map(kernel, blocks))
    return _stitch(results)


def _stitch(results: Sequence[BlockResult]) -> BlockResult:
    if not results:
        raise ValueError("map_rows needs at least one row")
    if isinstance(results[0], tuple):
        return tuple(np.concatenate(parts, axis=0) for parts in zip(*results))
    return np.concatenate(results, axis=0)
