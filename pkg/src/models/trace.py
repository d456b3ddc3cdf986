import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    f_value: float
    g_value: float
    h_value: float
    residual_sq: Optional[float] = None  # None for the initial point
    psnr: Optional[float] = None


@dataclass
class ConvergenceTrace:
    """Objective values of a run: the initial point followed by one record
    per completed iteration."""

    initial: TraceRecord
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def h_values(self) -> np.ndarray:
        """h(x^(0)), h(x^(1)), …"""
        return np.array([self.initial.h_value] + [r.h_value for r in self.records])

    @property
    def f_values(self) -> np.ndarray:
        return np.array([self.initial.f_value] + [r.f_value for r in self.records])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual_sq for r in self.records], dtype=np.float64)

    @property
    def psnr_values(self) -> np.ndarray:
        return np.array([math.nan if r.psnr is None else r.psnr for r in self.records])

    def rows(self) -> list[TraceRecord]:
        return [self.initial, *self.records]
