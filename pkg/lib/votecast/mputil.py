"""
Small helpers for running independent work items in a process pool.
"""
import logging
import multiprocessing
import os

__all__ = ['start_methods', 'default_pool_size', 'map_pool']

log = logging.getLogger(__name__)


def start_methods():
    """Multiprocessing start methods available on this platform."""
    methods = []
    for sm in ('spawn', 'fork', 'forkserver'):
        try:
            multiprocessing.get_context(sm)
            methods.append(sm)
        except ValueError:
            pass
    return methods


def default_pool_size(n_items, requested=None):
    """
    Number of worker processes to use for ``n_items`` work items.

    ``requested`` of None or 0 means one per available CPU.  The result never
    exceeds ``n_items`` and is at least 1.

    >>> default_pool_size(3, requested=8)
    3
    >>> default_pool_size(0, requested=4)
    1
    """
    if not requested:
        try:
            requested = len(os.sched_getaffinity(0))
        except AttributeError:
            requested = os.cpu_count() or 1
    return max(1, min(int(requested), int(n_items)))


def map_pool(func, items, pool_size, method=None):
    """
    Apply ``func`` to every entry of ``items``, in a pool of ``pool_size``
    processes, and return the results in input order.

    ``func`` must be a picklable module-level callable.  With ``pool_size``
    of 1 or less (or a single item) everything runs in this process, which
    gives results identical to the pooled run.

    Parameters
    ----------
    func : callable
    items : sequence
    pool_size : int
    method : {'spawn', 'fork', 'forkserver'}, optional
        Multiprocessing start method; the platform default when None.
    """
    items = list(items)
    pool_size = min(int(pool_size or 1), len(items))
    if pool_size <= 1:
        return [func(item) for item in items]

    log.debug("Running %d items in %d processes", len(items), pool_size)
    ctx = multiprocessing.get_context(method)
    with ctx.Pool(pool_size) as pool:
        # one item per task keeps long cells from queueing behind each other
        return pool.map(func, items, chunksize=1)
