import os
import threading
from concurrent.futures import Future, ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional

from rich.console import Console

from superell.config import DEFAULT_REJECTION_FACTOR
from superell.ff import make_field
from superell.models import ExperimentConfig
from superell.scanner import PolynomialScanner, ShardResult, TallyRequest


@dataclass(frozen=True)
class ShardTask:
    """
    One unit of work: an enumeration range, a Monte-Carlo quota when `quota`
    is set, or counting tallies over the range when `tally` is set.
    """

    index: int
    config: ExperimentConfig
    max_field_order: int
    start: int = 0
    stop: int = 0
    quota: Optional[int] = None
    rejection_factor: int = DEFAULT_REJECTION_FACTOR
    tally: Optional[TallyRequest] = None

    def describe(self) -> str:
        if self.quota is not None:
            return f"shard {self.index} ({self.quota} samples)"
        return f"shard {self.index} [{self.start}, {self.stop})"


@lru_cache(maxsize=8)
def _scanner_for(config: ExperimentConfig, max_field_order: int) -> PolynomialScanner:
    # One set of field tables per worker process and configuration.
    spec = make_field(config.p, config.k, max_order=max_field_order)
    return PolynomialScanner(config, spec)


def run_shard(task: ShardTask) -> ShardResult:
    scanner = _scanner_for(task.config, task.max_field_order)
    if task.quota is not None:
        return scanner.sample(task.index, task.quota, task.rejection_factor)
    if task.tally is not None:
        return scanner.tally_range(task.index, task.start, task.stop, task.tally)
    return scanner.scan_range(task.index, task.start, task.stop)


def range_tasks(
    config: ExperimentConfig,
    size: int,
    shard_size: int,
    max_field_order: int,
    tally: Optional[TallyRequest] = None,
) -> List[ShardTask]:
    """Split enumeration positions [0, size) into consecutive shards."""
    return [
        ShardTask(
            i, config, max_field_order, start=start, stop=min(start + shard_size, size), tally=tally
        )
        for i, start in enumerate(range(0, size, shard_size))
    ]


def sample_tasks(
    config: ExperimentConfig,
    samples: int,
    shard_size: int,
    max_field_order: int,
    rejection_factor: int = DEFAULT_REJECTION_FACTOR,
) -> List[ShardTask]:
    """Shard i draws min(shard_size, remaining) samples from its own stream."""
    return [
        ShardTask(
            i,
            config,
            max_field_order,
            quota=min(shard_size, samples - start),
            rejection_factor=rejection_factor,
        )
        for i, start in enumerate(range(0, samples, shard_size))
    ]


class ParallelScanner:
    """
    Fans shards out over a ProcessPoolExecutor and merges them in shard order.

    Progress lines go to a stderr console under a lock. With one worker the
    shards run inline in the calling process.
    """

    def __init__(self, max_workers: Optional[int] = None, console: Optional[Console] = None):
        """
        Args:
            max_workers: Number of worker processes. If None, uses os.cpu_count().
            console: Progress console; defaults to a stderr console.
        """
        self.max_workers = max_workers or os.cpu_count() or 1
        self.console = console or Console(stderr=True)
        self._executor: Optional[ProcessPoolExecutor] = None
        self._progress_lock = threading.Lock()

    def _pool(self) -> ProcessPoolExecutor:
        if self._executor is None:
            self._executor = ProcessPoolExecutor(max_workers=self.max_workers)
        return self._executor

    def _report(self, completed: int, total: int, message: str) -> None:
        with self._progress_lock:
            self.console.print(f"[{completed}/{total}] {message}", markup=False, highlight=False)

    def run(self, tasks: List[ShardTask]) -> ShardResult:
        """
        Run every task and merge the results in shard-index order.

        Raises:
            Exception: The first failing shard's exception; no partial result is returned.
        """
        total = len(tasks)
        merged = ShardResult(index=-1)
        if self.max_workers == 1 or total <= 1:
            for completed, task in enumerate(tasks, start=1):
                try:
                    merged.merge(run_shard(task))
                except Exception as e:
                    self._report(completed, total, f"Failed {task.describe()}: {e}")
                    raise
                self._report(completed, total, f"Completed {task.describe()}")
            return merged

        pool = self._pool()
        futures: List[tuple[ShardTask, Future[ShardResult]]] = [
            (task, pool.submit(run_shard, task)) for task in tasks
        ]
        for completed, (task, future) in enumerate(futures, start=1):
            try:
                result = future.result()
            except Exception as e:
                self._report(completed, total, f"Failed {task.describe()}: {e}")
                for _, pending in futures:
                    pending.cancel()
                raise
            merged.merge(result)
            self._report(completed, total, f"Completed {task.describe()}")
        return merged

    def cleanup(self) -> None:
        """Shut down the worker pool; safe to call more than once."""
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None
