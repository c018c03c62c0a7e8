"""Run metrics: wall times and outcome counts per job."""

import threading
import time
from collections import defaultdict
from dataclasses import dataclass, field


@dataclass
class JobMetrics:
    """Metrics for one kind of job (a suite, a solve, a sweep point)."""

    count: int = 0
    total_time: float = 0.0
    failure_count: int = 0
    error_count: int = 0
    outcomes: dict[str, int] = field(default_factory=lambda: defaultdict(int))

    @property
    def average_time(self) -> float:
        if self.count == 0:
            return 0.0
        return self.total_time / self.count


class RunMetrics:
    """Collects per-job timings for a run's metadata.

    State is per-process; sweep workers report their own metadata.
    """

    def __init__(self):
        """Initialize metrics collector."""
        self._jobs: dict[str, JobMetrics] = defaultdict(JobMetrics)
        self._lock = threading.Lock()
        self._start_time = time.time()
        self._started_at = time.strftime("%Y-%m-%dT%H:%M:%S%z")

    def record(self, job: str, outcome: str, duration: float):
        """Record one finished job.

        Args:
            job: Job name, e.g. ``solve`` or ``suite:nondegeneracy``
            outcome: ``passed``, ``failed``, ``aborted``, ``error`` or ``ok``
            duration: Wall time in seconds
        """
        with self._lock:
            metrics = self._jobs[job]
            metrics.count += 1
            metrics.total_time += duration
            metrics.outcomes[outcome] += 1
            if outcome == "failed":
                metrics.failure_count += 1
            elif outcome == "error":
                metrics.error_count += 1

    def get_metrics(self) -> dict:
        """Timestamps, durations and outcome counts."""
        with self._lock:
            jobs = {
                name: {
                    "count": m.count,
                    "total_time": round(m.total_time, 4),
                    "average_time": round(m.average_time, 4),
                    "failures": m.failure_count,
                    "errors": m.error_count,
                    "outcomes": dict(m.outcomes),
                }
                for name, m in sorted(self._jobs.items())
            }
        return {
            "started_at": self._started_at,
            "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "elapsed_seconds": round(time.time() - self._start_time, 3),
            "jobs": jobs,
        }

    def reset(self):
        with self._lock:
            self._jobs.clear()
            self._start_time = time.time()
            self._started_at = time.strftime("%Y-%m-%dT%H:%M:%S%z")
