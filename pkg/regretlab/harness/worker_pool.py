#!/usr/bin/env python3
"""
Worker pool for grid rows and Monte Carlo trials.

Runs independent units of work on threads and hands results back in
submission order, so aggregates never depend on the number of workers.
"""

import multiprocessing
import os
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Generic, List, Optional, Sequence, TypeVar

from decologr import Logger as log

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "REGRETLAB_THREADS"


class TaskState(Enum):
    """Lifecycle of one unit of work"""

    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class TaskOutcome(Generic[R]):
    """
    Result slot of one unit of work.

    :param index: Position in the submitted sequence
    :param state: Final state
    :param value: Return value when completed
    :param error: Exception raised when failed
    :param worker_id: Thread that ran it
    """

    index: int
    state: TaskState = TaskState.PENDING
    value: Optional[R] = None
    error: Optional[BaseException] = None
    worker_id: Optional[str] = field(default=None)

    @property
    def ok(self) -> bool:
        return self.state is TaskState.COMPLETED


def default_workers() -> int:
    """CPU count, capped by REGRETLAB_THREADS when it is set to a positive integer."""
    count = multiprocessing.cpu_count()
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return count
    try:
        cap = int(raw)
    except ValueError:
        log.warning(f"Ignoring {THREADS_ENV}={raw!r}: not an integer")
        return count
    if cap < 1:
        log.warning(f"Ignoring {THREADS_ENV}={raw!r}: must be >= 1")
        return count
    return min(count, cap)


class WorkerPool:
    """
    Fixed set of worker threads draining a list of tasks.

    - Tasks are claimed in index order under a lock
    - Exceptions are captured per task, never propagated out of a worker
    - Results are returned in submission order
    """

    def __init__(self, max_workers: Optional[int] = None, name: str = "regretlab"):
        """
        :param max_workers: Number of threads (default: CPU count, capped by REGRETLAB_THREADS)
        :param name: Prefix for thread names
        """
        self.max_workers = max_workers or default_workers()
        self.name = name
        self.lock = threading.Lock()
        self.running = False

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[TaskOutcome[R]]:
        """
        Apply fn to every item.

        :param fn: Unit of work
        :param items: Inputs, one task each
        :return: One TaskOutcome per item, in the order of items
        """
        outcomes: List[TaskOutcome[R]] = [TaskOutcome(index=i) for i in range(len(items))]
        if not items:
            return outcomes
        workers = min(self.max_workers, len(items))
        if workers == 1:
            for outcome in outcomes:
                self._execute(fn, items[outcome.index], outcome, f"{self.name}_1")
            return outcomes

        next_index = [0]

        def worker_loop(worker_id: str):
            while True:
                with self.lock:
                    if next_index[0] >= len(items):
                        return
                    outcome = outcomes[next_index[0]]
                    next_index[0] += 1
                    outcome.state = TaskState.RUNNING
                self._execute(fn, items[outcome.index], outcome, worker_id)

        self.running = True
        log.info(f"Started worker pool with {workers} workers for {len(items)} tasks")
        threads = [
            threading.Thread(
                target=worker_loop, args=(f"{self.name}_{i + 1}",), daemon=True, name=f"{self.name}_{i + 1}"
            )
            for i in range(workers)
        ]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        self.running = False
        log.info("Worker pool stopped")
        return outcomes

    @staticmethod
    def _execute(fn: Callable[[Any], Any], item: Any, outcome: TaskOutcome, worker_id: str):
        outcome.worker_id = worker_id
        outcome.state = TaskState.RUNNING
        try:
            outcome.value = fn(item)
            outcome.state = TaskState.COMPLETED
        except Exception as ex:
            outcome.error = ex
            outcome.state = TaskState.FAILED
            log.debug(f"Task {outcome.index} failed on {worker_id}: {ex}")

    def status(self, outcomes: Sequence[TaskOutcome]) -> Dict[str, Any]:
        """
        Count outcomes per state.

        :return: Dictionary with total and per-state counts
        """
        counts = {state.value: 0 for state in TaskState}
        for outcome in outcomes:
            counts[outcome.state.value] += 1
        return {"total": len(outcomes), "max_workers": self.max_workers, **counts}
