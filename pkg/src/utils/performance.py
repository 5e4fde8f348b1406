"""
Performance utilities for timing fits and predictions.
"""
import time
import statistics
from typing import Any, Callable, Optional, Tuple


class Stopwatch:
    """
    Wall-clock timer usable as a context manager.

    Usage:
        with Stopwatch() as sw:
            model = fit(...)
        print(sw.elapsed)
    """

    def __init__(self) -> None:
        self._start: Optional[float] = None
        self.elapsed: float = 0.0

    def __enter__(self) -> "Stopwatch":
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc_info) -> None:
        self.elapsed = time.perf_counter() - self._start


def median_time(fn: Callable[[], Any], repeats: int = 3) -> Tuple[float, Any]:
    """
    Runs fn `repeats` times and returns the median wall-clock time.

    Args:
        fn: Zero-argument callable to time
        repeats: Number of runs (at least 1)

    Returns:
        Tuple of (median seconds, result of the last run)
    """
    times = []
    result = None
    for _ in range(max(1, repeats)):
        with Stopwatch() as sw:
            result = fn()
        times.append(sw.elapsed)
    return statistics.median(times), result
