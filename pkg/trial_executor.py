"""
LOFT v1.0 - Trial Execution Layer
Bounded worker pool for independent Monte Carlo trials.

Architecture:
  harness → TrialTask list → worker processes (or the calling process)
                                   ↓
                       ExecutionResult per task, sorted by index

A failing trial never takes the run down: the exception is captured in its
ExecutionResult and counted, and the caller decides what to exclude.
"""

import threading
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from tqdm import tqdm

from utils.logger import get_logger

log = get_logger(__name__)


@dataclass
class TrialTask:
    """One unit of work; ``handler`` must be a module-level function so it pickles."""
    index: int
    handler: Callable
    args: tuple = ()
    kwargs: dict = field(default_factory=dict)


@dataclass
class ExecutionResult:
    """Result of task execution."""
    index: int
    success: bool
    result: Any = None
    error: str | None = None
    execution_time_ms: float = 0.0


def _run_task(task: TrialTask) -> ExecutionResult:
    """Worker entry point (module level for pickling)."""
    start_time = time.perf_counter()
    try:
        result = task.handler(*task.args, **task.kwargs)
        return ExecutionResult(
            index=task.index,
            success=True,
            result=result,
            execution_time_ms=(time.perf_counter() - start_time) * 1000,
        )
    except Exception as e:
        return ExecutionResult(
            index=task.index,
            success=False,
            error=f"{type(e).__name__}: {e}",
            execution_time_ms=(time.perf_counter() - start_time) * 1000,
        )


class TrialExecutor:
    """
    Runs trial tasks in parallel and returns their results in index order.

    Features:
      - max_workers = 1 runs in the calling process (no pickling, easy to debug)
      - process pool otherwise, bounded by max_workers
      - optional tqdm progress bar
      - success/failure statistics
    """

    def __init__(self, max_workers: int = 1, progress: bool = False):
        """
        Initialize the executor.

        Args:
            max_workers: Number of worker processes (>= 1).
            progress: Show a progress bar.
        """
        if max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {max_workers}")
        self._max_workers = max_workers
        self._progress = progress

        # Statistics
        self._stats = {
            "total_tasks": 0,
            "completed_tasks": 0,
            "failed_tasks": 0,
            "total_time_ms": 0.0
        }
        self._stats_lock = threading.Lock()

        log.debug("TrialExecutor initialized with %d workers", max_workers)

    def run(self, tasks: Sequence[TrialTask], desc: str = "trials") -> list[ExecutionResult]:
        """
        Execute every task.

        Args:
            tasks: Tasks with distinct indices.
            desc: Progress bar label.

        Returns:
            One ExecutionResult per task, sorted by task index.
        """
        with self._stats_lock:
            self._stats["total_tasks"] += len(tasks)

        results: list[ExecutionResult] = []
        pbar = tqdm(total=len(tasks), desc=desc, unit="trial", disable=not self._progress)

        if self._max_workers == 1 or len(tasks) <= 1:
            for task in tasks:
                results.append(self._record(_run_task(task)))
                pbar.update(1)
        else:
            with ProcessPoolExecutor(max_workers=self._max_workers) as executor:
                futures = [executor.submit(_run_task, task) for task in tasks]
                for future in as_completed(futures):
                    results.append(self._record(future.result()))
                    pbar.update(1)

        pbar.close()
        results.sort(key=lambda r: r.index)
        return results

    def _record(self, result: ExecutionResult) -> ExecutionResult:
        with self._stats_lock:
            if result.success:
                self._stats["completed_tasks"] += 1
                self._stats["total_time_ms"] += result.execution_time_ms
            else:
                self._stats["failed_tasks"] += 1
        if not result.success:
            log.warning("Trial %d failed: %s", result.index, result.error)
        return result

    def get_stats(self) -> dict:
        """Get execution statistics."""
        with self._stats_lock:
            stats = dict(self._stats)
            if stats["completed_tasks"] > 0:
                stats["avg_time_ms"] = stats["total_time_ms"] / stats["completed_tasks"]
            else:
                stats["avg_time_ms"] = 0.0
            return stats
