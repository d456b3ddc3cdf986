import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ProjectorGeometry(BaseModel):
    """Parallel-beam geometry: equally spaced angles over [0, π)."""

    model_config = ConfigDict(frozen=True)

    num_angles: int = Field(..., gt=0)
    num_detector_bins: int = Field(..., gt=1)
    detector_spacing: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if not math.isfinite(self.detector_spacing):
            raise ValueError("detector_spacing must be finite")
        return self

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.num_angles, dtype=np.float64) * (np.pi / self.num_angles)

    @classmethod
    def for_image(cls, shape: tuple[int, int], num_angles: int, detector_spacing: float = 1.0) -> "ProjectorGeometry":
        """Smallest detector covering the image diagonal."""
        height, width = shape
        diagonal = math.hypot(width, height)
        bins = max(2, math.ceil(diagonal / detector_spacing))
        return cls(num_angles=num_angles, num_detector_bins=bins, detector_spacing=detector_spacing)

    def covers(self, shape: tuple[int, int]) -> bool:
        height, width = shape
        return self.num_detector_bins >= math.hypot(width, height) / self.detector_spacing
