"""Concurrent job runner for independent solves and study levels."""
import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from app.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def run_jobs(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None,
             label: str = "job") -> list[R]:
    """Apply ``fn`` to every item, returning results in input order.

    With one thread the jobs run inline. Failures are logged and the first
    one (in input order) is re-raised after all jobs have finished.
    """
    items = list(items)
    threads = max(1, threads or settings.threads)

    if threads == 1 or len(items) <= 1:
        results = []
        for index, item in enumerate(items):
            try:
                results.append(fn(item))
            except Exception as e:
                logger.error(f"{label} {index} failed: {e}")
                raise
            logger.debug(f"{label} {index} finished")
        return results

    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, item) for item in items]

    results = []
    first_error: BaseException | None = None
    for index, future in enumerate(futures):
        error = future.exception()
        if error is not None:
            logger.error(f"{label} {index} failed: {error}")
            first_error = first_error or error
            continue
        logger.debug(f"{label} {index} finished")
        results.append(future.result())
    if first_error is not None:
        raise first_error
    return results
