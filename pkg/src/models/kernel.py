from dataclasses import dataclass

import numpy as np

from src.models.errors import ConfigurationError


@dataclass(frozen=True)
class Kernel:
    """Nonnegative blur kernel with odd width and height, centered."""

    weights: np.ndarray  # (height, width)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        if w.ndim == 1:
            w = w[np.newaxis, :]
        if w.ndim != 2 or w.size == 0:
            raise ConfigurationError(f"kernel must be 2-D, got shape {w.shape}", module="operators")
        if w.shape[0] % 2 == 0 or w.shape[1] % 2 == 0:
            raise ConfigurationError(f"kernel sides must be odd, got {w.shape}", module="operators")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ConfigurationError("kernel weights must be finite and nonnegative", module="operators")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_flat(cls, width: int, height: int, weights) -> "Kernel":
        flat = np.asarray(weights, dtype=np.float64).ravel()
        if flat.size != width * height:
            raise ConfigurationError(
                f"kernel of {width}x{height} needs {width * height} weights, got {flat.size}",
                module="operators",
            )
        return cls(flat.reshape(height, width))

    @property
    def width(self) -> int:
        return self.weights.shape[1]

    @property
    def height(self) -> int:
        return self.weights.shape[0]

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def is_symmetric(self) -> bool:
        return bool(np.allclose(self.weights, self.weights[::-1, ::-1], rtol=0.0, atol=1e-15))
