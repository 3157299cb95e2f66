"""Ordered fan-out of independent work items."""

from __future__ import annotations

from collections.abc import Callable, Iterable
import logging
import multiprocessing
import os
from typing import TypeVar

from .exceptions import InvalidParameterError

_LOGGER = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_jobs(jobs: int | None) -> int:
    """Return a concrete worker count; 0 or None means one per CPU."""
    if jobs is None or jobs == 0:
        return os.cpu_count() or 1
    if jobs < 0:
        raise InvalidParameterError(f"jobs must be >= 0, got {jobs}")
    return jobs


def map_ordered(
    func: Callable[[T], R], items: Iterable[T], jobs: int | None = 1
) -> list[R]:
    """Apply ``func`` to every item and return the results in input order.

    ``func`` must be picklable (a module-level function or a partial of one)
    when more than one worker is used.
    """
    work = list(items)
    workers = min(resolve_jobs(jobs), len(work)) if work else 1
    if workers <= 1:
        return [func(item) for item in work]

    _LOGGER.debug("Mapping %d items over %d workers", len(work), workers)
    with multiprocessing.get_context("spawn").Pool(workers) as pool:
        return pool.map(func, work)
