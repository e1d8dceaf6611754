"""
ReplicatePool: runs fn(index) for a batch of replicate indices on worker threads.
Outcomes come back sorted by index; a failing replicate is logged and recorded, never raised.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
import os
import threading
from typing import Any, Callable, List, Optional

from loguru import logger


@dataclass(frozen=True)
class Outcome:
    index: int
    value: Any = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


class ReplicatePool:
    def __init__(self, jobs: Optional[int] = None, name: str = "replicates") -> None:
        self._jobs = max(1, int(jobs or os.cpu_count() or 1))
        self._name = name
        self._executor: Optional[ThreadPoolExecutor] = None
        self._lock = threading.Lock()

    @property
    def jobs(self) -> int:
        return self._jobs

    def start(self) -> None:
        with self._lock:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=self._jobs, thread_name_prefix=self._name)
                logger.debug("Replicate pool started (jobs={})", self._jobs)

    def stop(self) -> None:
        with self._lock:
            if self._executor is not None:
                self._executor.shutdown(wait=True)
                self._executor = None
                logger.debug("Replicate pool stopped")

    def __enter__(self) -> "ReplicatePool":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    def _call(self, fn: Callable[[int], Any], index: int) -> Outcome:
        try:
            return Outcome(index, fn(index))
        except Exception as e:
            logger.error("Replicate {} failed: {}", index, e)
            return Outcome(index, error=f"{type(e).__name__}: {e}")

    def map(self, fn: Callable[[int], Any], count: int) -> List[Outcome]:
        count = int(count)
        if count <= 0:
            return []
        if self._jobs == 1:
            outcomes = [self._call(fn, i) for i in range(count)]
        else:
            self.start()
            futures = [self._executor.submit(self._call, fn, i) for i in range(count)]
            outcomes = [f.result() for f in as_completed(futures)]
        failed = sum(1 for o in outcomes if not o.ok)
        if failed:
            logger.warning("{} of {} replicates failed", failed, count)
        return sorted(outcomes, key=lambda o: o.index)
