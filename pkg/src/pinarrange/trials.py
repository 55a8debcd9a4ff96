"""Fan-out of independent randomized trials.

Trial ``i`` of a run with master seed ``s`` uses seed ``s + i``.  The worker
count comes from ``ARRANGE_THREADS`` (default 1: run inline).  Results are
always returned in trial order.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, TypeVar

T = TypeVar("T")


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("ARRANGE_THREADS", "1")))
    except ValueError:
        return 1


def trial_seeds(seed: int, trials: int) -> list[int]:
    if trials < 1:
        raise ValueError("need at least one trial")
    return [seed + i for i in range(trials)]


def run_trials(fn: Callable[[int], T], seeds: list[int]) -> list[T]:
    workers = min(worker_count(), len(seeds))
    if workers <= 1:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


def best_of(results: list, cost: Callable[[object], float]):
    """Lowest-cost result; ties go to the earliest trial."""
    return min(enumerate(results), key=lambda ir: (cost(ir[1]), ir[0]))[1]
