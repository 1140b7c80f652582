"""
LOFT v1.0 - Performance Timing Utilities
Per-phase wall-time measurement for the placement optimizer.

Tracks:
  - Graph build time
  - Eigen solve time
  - Gradient assembly time
  - Line search (backtracking) time

Timings are diagnostics only: they go to the log and into TrialResult,
never into CSV/JSON outputs, so runs stay byte-reproducible.
"""

import time
import threading
from dataclasses import dataclass, field
from typing import Callable
from contextlib import contextmanager
from functools import wraps
from utils.logger import get_logger

log = get_logger(__name__)


@dataclass
class PhaseMetrics:
    """Accumulated wall time per named phase (milliseconds)."""
    totals_ms: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    total_ms: float = 0.0

    def mean_ms(self, name: str) -> float:
        """Mean duration of one call of a phase."""
        count = self.counts.get(name, 0)
        return self.totals_ms.get(name, 0.0) / count if count else 0.0

    def summary(self) -> str:
        """Human-readable summary."""
        parts = [f"{name}: {ms:.0f}ms" for name, ms in sorted(self.totals_ms.items())]
        return f"Total: {self.total_ms:.0f}ms | " + " | ".join(parts)

    def identify_bottleneck(self) -> str | None:
        """Identify the slowest phase."""
        if not self.totals_ms:
            return None
        return max(self.totals_ms, key=self.totals_ms.get)


class PerformanceTimer:
    """
    Accumulating phase timer.

    Usage:
        timer = PerformanceTimer()

        with timer.measure("eigen"):
            spectral = eigen_lambda2(graph.laplacian_w, graph.node_weights)

        metrics = timer.get_metrics()
        log.debug(metrics.summary())
    """

    def __init__(self, enabled: bool = True):
        """
        Initialize the timer.

        Args:
            enabled: Whether timing is enabled.
        """
        self.enabled = enabled
        self._totals: dict[str, float] = {}
        self._counts: dict[str, int] = {}
        self._start_time = time.perf_counter()
        self._lock = threading.Lock()

    @contextmanager
    def measure(self, name: str):
        """
        Context manager to measure a code block.

        Args:
            name: Name of the phase being measured.
        """
        if not self.enabled:
            yield
            return

        start = time.perf_counter()
        try:
            yield
        finally:
            self.record(name, (time.perf_counter() - start) * 1000)

    def record(self, name: str, duration_ms: float) -> None:
        """
        Manually record a timing.

        Args:
            name: Name of the phase.
            duration_ms: Duration in milliseconds.
        """
        if not self.enabled:
            return

        with self._lock:
            self._totals[name] = self._totals.get(name, 0.0) + duration_ms
            self._counts[name] = self._counts.get(name, 0) + 1

    def elapsed_ms(self) -> float:
        """Wall time since the timer was created."""
        return (time.perf_counter() - self._start_time) * 1000

    def get_metrics(self) -> PhaseMetrics:
        """
        Get accumulated phase metrics.

        Returns:
            PhaseMetrics snapshot.
        """
        with self._lock:
            return PhaseMetrics(
                totals_ms=dict(self._totals),
                counts=dict(self._counts),
                total_ms=self.elapsed_ms(),
            )

    def log_summary(self, label: str) -> None:
        """Write the timing summary to the debug log."""
        metrics = self.get_metrics()
        log.debug("⏱ %s: %s", label, metrics.summary())

        bottleneck = metrics.identify_bottleneck()
        if bottleneck:
            log.debug("⏱ %s bottleneck: %s (%d calls, %.2fms each)", label, bottleneck,
                      metrics.counts[bottleneck], metrics.mean_ms(bottleneck))


def timed(name: str = None):
    """
    Decorator to time a function.

    Args:
        name: Optional name (defaults to function name).

    Usage:
        @timed("monte_carlo")
        def monte_carlo(...):
            ...
    """
    def decorator(func: Callable):
        @wraps(func)
        def wrapper(*args, **kwargs):
            func_name = name or func.__name__
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                elapsed_ms = (time.perf_counter() - start) * 1000
                log.info("⏱ %s: %.1fms", func_name, elapsed_ms)
        return wrapper
    return decorator
