import logging
import os
from concurrent.futures import ProcessPoolExecutor

import torch

__all__ = ["auto_parallel", "WorkerPool", "shared"]

logger = logging.getLogger(__name__)

# per-process context installed by WorkerPool (ensemble, arena config, ...)
_SHARED = {}


def shared():
    return _SHARED


def auto_parallel(threads: int) -> int:
    if threads > 0:
        return threads
    if hasattr(os, "sched_getaffinity"):
        n = len(os.sched_getaffinity(0))
    else:
        n = os.cpu_count() or 1
    logger.info(f"auto parallel: {n} workers")
    return n


def _init_worker(context):
    # one intra-op thread per worker keeps results independent of the worker count
    torch.set_num_threads(1)
    _SHARED.clear()
    _SHARED.update(context)


class WorkerPool:
    """Order-preserving map over independent tasks.

    With one worker everything runs in-process. Otherwise a process pool is
    started whose workers receive ``context`` once; task functions read it
    through ``shared()``. Results come back in task order whatever the
    completion order, so reductions over them do not depend on scheduling.
    """

    def __init__(self, threads: int, context=None):
        self.threads = auto_parallel(threads)
        self.context = dict(context or {})
        self._executor = None
        self._saved = None

    def __enter__(self):
        if self.threads > 1:
            self._executor = ProcessPoolExecutor(max_workers=self.threads, initializer=_init_worker,
                                                 initargs=(self.context,))
        else:
            self._saved = dict(_SHARED)
            _SHARED.clear()
            _SHARED.update(self.context)
        return self

    def __exit__(self, *exc):
        if self._executor is not None:
            self._executor.shutdown(wait=True, cancel_futures=True)
            self._executor = None
        else:
            _SHARED.clear()
            _SHARED.update(self._saved or {})
        return False

    def map(self, fn, tasks):
        tasks = list(tasks)
        if self._executor is None:
            return [fn(t) for t in tasks]
        chunksize = max(1, len(tasks) // (4 * self.threads))
        return list(self._executor.map(fn, tasks, chunksize=chunksize))
