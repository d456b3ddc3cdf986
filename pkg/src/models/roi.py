from dataclasses import dataclass

import numpy as np

from src.models.errors import ConfigurationError


@dataclass(frozen=True)
class RoiMask:
    """Boolean region of interest over an image grid."""

    mask: np.ndarray
    label: str = "roi"

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool, copy=True)
        if m.ndim != 2:
            raise ConfigurationError(f"ROI '{self.label}' must be 2-D, got shape {m.shape}", module="metrics")
        if not m.any():
            raise ConfigurationError(f"ROI '{self.label}' has no pixel inside", module="metrics")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def count(self) -> int:
        return int(self.mask.sum())
