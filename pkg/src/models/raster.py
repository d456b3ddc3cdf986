from dataclasses import dataclass

import numpy as np

from src.models.errors import DimensionError


def _frozen(values, ndim: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim or arr.size == 0:
        raise DimensionError(f"{what} must be a non-empty {ndim}-D array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Raster:
    """Immutable 2-D image grid, stored as a (height, width) float64 array.

    Row-major flattening (`flat`) gives the pixel order used by every
    operator.
    """

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, 2, "Raster"))

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "Raster":
        flat = np.asarray(values, dtype=np.float64).ravel()
        if width < 1 or height < 1:
            raise DimensionError(f"Raster dimensions must be positive, got {width}x{height}")
        if flat.size != width * height:
            raise DimensionError(
                f"Raster of {width}x{height} needs {width * height} values, got {flat.size}"
            )
        return cls(flat.reshape(height, width))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0))


@dataclass(frozen=True)
class MeasurementVector:
    """Immutable flat vector of observed bins (y, z or ŷ)."""

    bins: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bins", _frozen(np.ravel(self.bins), 1, "MeasurementVector"))

    @property
    def length(self) -> int:
        return self.bins.size


RasterLike = Raster | np.ndarray
BinsLike = MeasurementVector | np.ndarray


def as_image(x: RasterLike, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Return the float64 (height, width) array behind a raster-like input."""
    arr = x.values if isinstance(x, Raster) else np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D raster, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise DimensionError(f"raster shape {arr.shape} does not match expected {tuple(shape)}")
    return arr


def as_bins(v: BinsLike, length: int | None = None) -> np.ndarray:
    arr = v.bins if isinstance(v, MeasurementVector) else np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"expected a flat measurement vector, got shape {arr.shape}")
    if length is not None and arr.size != length:
        raise DimensionError(f"measurement length {arr.size} does not match expected {length}")
    return arr
