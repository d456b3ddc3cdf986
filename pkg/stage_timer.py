import logging
import time
from contextlib import contextmanager

logger = logging.getLogger(__name__)


class StageTimer:
    """Wall-clock durations of pipeline stages (simulate, solve, metrics, write)."""

    def __init__(self):
        self.durations = {}

    @contextmanager
    def stage(self, label: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.durations[label] = round((time.perf_counter() - start) * 1000, 2)
            logger.info(f"[stage] {label} took {self.durations[label]} ms", extra={"stage": label, "ms": self.durations[label]})

    def report(self) -> dict[str, float]:
        return dict(self.durations)
