"""
Ordered thread-pool map for independent per-cluster, per-node and per-input work.

The worker count is capped by MCGP_THREADS. Results are returned in input
order, so parallel and sequential runs produce identical outputs.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from config.settings import THREADS

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> List[R]:
    """
    Applies fn to every item, possibly on several threads.

    Args:
        fn: Pure function of one item
        items: Work items
        max_workers: Upper bound on threads (defaults to MCGP_THREADS)

    Returns:
        List of results in the order of items
    """
    items = list(items)
    workers = min(max_workers or THREADS, len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    logger.debug("parallel_map: %d items on %d threads", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
