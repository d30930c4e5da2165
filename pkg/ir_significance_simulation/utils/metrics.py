"""In-process counters and timers for experiment bookkeeping."""

import time
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass
from threading import Lock
from typing import Any, Dict, List, Optional

from .logging import get_logger

logger = get_logger("metrics")


@dataclass
class MetricStats:
    """Statistical summary of metric values."""
    count: int
    sum: float
    min: float
    max: float
    avg: float

    @classmethod
    def from_values(cls, values: List[float]) -> 'MetricStats':
        """Create stats from list of values."""
        if not values:
            return cls(0, 0.0, 0.0, 0.0, 0.0)

        return cls(
            count=len(values),
            sum=sum(values),
            min=min(values),
            max=max(values),
            avg=sum(values) / len(values)
        )


class MetricsCollector:
    """Thread-safe counters and duration samples.

    Experiment workers increment counters concurrently, so every access goes
    through one lock.
    """

    def __init__(self):
        self._samples: Dict[str, List[float]] = defaultdict(list)
        self._counters: Dict[str, int] = defaultdict(int)
        self._lock = Lock()

    def record_metric(self, name: str, value: float) -> None:
        with self._lock:
            self._samples[name].append(value)

    def increment_counter(self, name: str, value: int = 1, tags: Optional[Dict[str, str]] = None) -> None:
        with self._lock:
            self._counters[self._make_key(name, tags)] += value

    def get_counter_value(self, name: str, tags: Optional[Dict[str, str]] = None) -> int:
        with self._lock:
            return self._counters.get(self._make_key(name, tags), 0)

    def get_metric_stats(self, name: str) -> MetricStats:
        with self._lock:
            return MetricStats.from_values(list(self._samples.get(name, [])))

    def get_all_metrics(self) -> Dict[str, Any]:
        with self._lock:
            return {
                'metrics': {name: MetricStats.from_values(values) for name, values in self._samples.items()},
                'counters': dict(self._counters),
            }

    def reset(self) -> None:
        with self._lock:
            self._samples.clear()
            self._counters.clear()

    @contextmanager
    def timer(self, name: str):
        """Context manager recording the wall time of a block."""
        start_time = time.perf_counter()
        try:
            yield
        finally:
            duration = time.perf_counter() - start_time
            self.record_metric(name, duration)
            logger.debug(f"{name} took {duration:.3f}s")

    def _make_key(self, name: str, tags: Optional[Dict[str, str]]) -> str:
        if not tags:
            return name

        tag_str = ','.join(f"{k}={v}" for k, v in sorted(tags.items()))
        return f"{name}[{tag_str}]"


# Global metrics collector instance
metrics = MetricsCollector()
