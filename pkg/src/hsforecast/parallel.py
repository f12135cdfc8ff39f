"""Order-preserving task map; results never depend on ``jobs``."""

from __future__ import annotations

from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], tasks: Sequence[T], jobs: int = 1) -> list[R]:
    if jobs == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=jobs)(delayed(fn)(t) for t in tasks)
