from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from scanspectra.common import forge

_T = TypeVar('_T')
_R = TypeVar('_R')


class AnalysisThreadPoolExecutor(ThreadPoolExecutor):
    """Thread pool sized from SCAN_SPECTRA_THREADS / engine.threads."""

    def __init__(self, max_workers: int = None, **kwargs):
        if max_workers is None:
            max_workers = forge.get_worker_count()
        kwargs.setdefault("thread_name_prefix", "scanspectra")
        super().__init__(max_workers=max_workers, **kwargs)


def ordered_map(fn: Callable[[_T], _R], items: Iterable[_T], max_workers: int = None) -> list[_R]:
    """Apply fn to every item on the pool, returning results in input order."""
    items = list(items)
    if not items:
        return []

    if max_workers is None:
        max_workers = forge.get_worker_count()
    if max_workers <= 1 or len(items) == 1:
        return [fn(item) for item in items]

    with AnalysisThreadPoolExecutor(max_workers=min(max_workers, len(items))) as executor:
        return list(executor.map(fn, items))
