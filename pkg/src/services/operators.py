"""Concrete nonnegative forward operators with exact adjoints.

Shapes follow numpy: rasters are (height, width) arrays and measurement
vectors are the row-major flattening of each operator's `output_shape`.
"""
import logging
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import ndimage

from src.models.errors import (
    ConfigurationError,
    DegenerateOperatorError,
    DimensionError,
    RasterFormatError,
    RasterIOError,
)
from src.models.geometry import ProjectorGeometry
from src.models.kernel import Kernel
from src.models.operator import LinearOperator
from src.models.raster import BinsLike, RasterLike, as_image

logger = logging.getLogger(__name__)

BOUNDARIES = ("periodic",)


# -------------------------------
# Operators
# -------------------------------

class IdentityOperator(LinearOperator):
    def __init__(self, image_shape: tuple[int, int]):
        super().__init__(image_shape, image_shape)

    def _forward(self, x):
        return x.ravel().copy()

    def _backward(self, v):
        return v.reshape(self.image_shape).copy()


class ConvolutionOperator(LinearOperator):
    """Circular 2-D convolution by a centered kernel (periodic boundary)."""

    def __init__(self, kernel: Kernel, image_shape: tuple[int, int]):
        height, width = image_shape
        if kernel.height > height or kernel.width > width:
            raise DimensionError(
                f"kernel {kernel.height}x{kernel.width} larger than image {height}x{width}",
                module="operators",
            )
        super().__init__(image_shape, image_shape)
        self.kernel = kernel

    def _forward(self, x):
        return ndimage.convolve(x, self.kernel.weights, mode="wrap").ravel()

    def _backward(self, v):
        # Correlation with the kernel is the exact transpose of the convolution.
        return ndimage.correlate(v.reshape(self.image_shape), self.kernel.weights, mode="wrap")

    def describe(self) -> dict:
        return {
            **super().describe(),
            "kernel_shape": [self.kernel.height, self.kernel.width],
            "kernel_sum": self.kernel.total,
        }


@lru_cache(maxsize=32)
def _radon_tables(geometry: ProjectorGeometry, image_shape: tuple[int, int]):
    """Per-angle lower detector index and linear-interpolation weights of
    every pixel center."""
    height, width = image_shape
    bins = geometry.num_detector_bins
    rows = np.arange(height) - (height - 1) / 2.0
    cols = np.arange(width) - (width - 1) / 2.0
    yy, xx = np.meshgrid(rows, cols, indexing="ij")
    theta = geometry.angles[:, np.newaxis]
    # Angle 0 integrates along image rows: the detector coordinate is the row offset.
    t = yy.ravel()[np.newaxis, :] * np.cos(theta) + xx.ravel()[np.newaxis, :] * np.sin(theta)
    position = t / geometry.detector_spacing + (bins - 1) / 2.0
    lower = np.clip(np.floor(position).astype(np.intp), 0, bins - 2)
    upper_weight = np.clip(position - lower, 0.0, 1.0)
    lower_weight = 1.0 - upper_weight
    for table in (lower, lower_weight, upper_weight):
        table.setflags(write=False)
    return lower, lower_weight, upper_weight


class RadonOperator(LinearOperator):
    """Pixel-driven parallel-beam projector.

    Each pixel deposits its value on the two detector bins bracketing the
    signed distance of its center to the central ray, with linear
    interpolation weights; the adjoint gathers with the same weights.
    Output is angle-major, detector-minor.
    """

    def __init__(self, geometry: ProjectorGeometry, image_shape: tuple[int, int], angle_index=None):
        image_shape = (int(image_shape[0]), int(image_shape[1]))
        if not geometry.covers(image_shape):
            raise DimensionError(
                f"{geometry.num_detector_bins} detector bins of spacing {geometry.detector_spacing} "
                f"do not cover the diagonal of a {image_shape[0]}x{image_shape[1]} image",
                module="operators",
            )
        if angle_index is None:
            angle_index = np.arange(geometry.num_angles)
        self.angle_index = np.asarray(angle_index, dtype=np.intp)
        lower, lower_weight, upper_weight = _radon_tables(geometry, image_shape)
        self._lower = lower[self.angle_index]
        self._lower_weight = lower_weight[self.angle_index]
        self._upper_weight = upper_weight[self.angle_index]
        self.geometry = geometry
        super().__init__(image_shape, (self.angle_index.size, geometry.num_detector_bins))

    def _forward(self, x):
        flat = x.ravel()
        bins = self.geometry.num_detector_bins
        sinogram = np.empty(self.output_shape)
        for a in range(self.output_shape[0]):
            lower = self._lower[a]
            sinogram[a] = np.bincount(lower, weights=flat * self._lower_weight[a], minlength=bins)
            sinogram[a] += np.bincount(lower + 1, weights=flat * self._upper_weight[a], minlength=bins)
        return sinogram.ravel()

    def _backward(self, v):
        sinogram = v.reshape(self.output_shape)
        rows = np.arange(self.output_shape[0])[:, np.newaxis]
        gathered = (
            self._lower_weight * sinogram[rows, self._lower]
            + self._upper_weight * sinogram[rows, self._lower + 1]
        )
        return gathered.sum(axis=0).reshape(self.image_shape)

    def restrict_rows(self, index: int, count: int) -> "RadonOperator":
        return RadonOperator(self.geometry, self.image_shape, self.angle_index[index::count])

    def describe(self) -> dict:
        return {
            **super().describe(),
            "num_angles": int(self.angle_index.size),
            "num_detector_bins": self.geometry.num_detector_bins,
            "detector_spacing": self.geometry.detector_spacing,
        }


class ScaledOperator(LinearOperator):
    """factor·A, for gain changes and operator normalization."""

    def __init__(self, parent: LinearOperator, factor: float):
        if not factor > 0:
            raise ConfigurationError(f"scale factor must be positive, got {factor}", module="operators")
        super().__init__(parent.image_shape, parent.output_shape)
        self.parent = parent
        self.factor = float(factor)

    def _forward(self, x):
        return self.factor * self.parent._forward(x)

    def _backward(self, v):
        return self.factor * self.parent._backward(v)

    def restrict_rows(self, index: int, count: int) -> "ScaledOperator":
        return ScaledOperator(self.parent.restrict_rows(index, count), self.factor)

    def describe(self) -> dict:
        return {**self.parent.describe(), "scale": self.factor}


# -------------------------------
# Operations
# -------------------------------

def _check_boundary(boundary: str) -> None:
    if boundary not in BOUNDARIES:
        raise ConfigurationError(f"unsupported boundary '{boundary}', only periodic", module="operators")


def conv_apply(kernel: Kernel, x: RasterLike, boundary: str = "periodic") -> np.ndarray:
    _check_boundary(boundary)
    image = as_image(x)
    return ConvolutionOperator(kernel, image.shape).apply(image)


def conv_adjoint(kernel: Kernel, v: BinsLike, image_shape: tuple[int, int], boundary: str = "periodic") -> np.ndarray:
    _check_boundary(boundary)
    return ConvolutionOperator(kernel, image_shape).adjoint(v)


def radon_apply(geometry: ProjectorGeometry, x: RasterLike) -> np.ndarray:
    image = as_image(x)
    return RadonOperator(geometry, image.shape).apply(image)


def radon_adjoint(geometry: ProjectorGeometry, v: BinsLike, image_shape: tuple[int, int]) -> np.ndarray:
    return RadonOperator(geometry, image_shape).adjoint(v)


def sensitivity(op: LinearOperator) -> np.ndarray:
    """s = Aᵀ1, required strictly positive for the multiplicative updates."""
    s = op.backprojected_ones
    unseen = int(np.count_nonzero(s <= 0))
    if unseen:
        raise DegenerateOperatorError(f"{unseen} pixel(s) are unseen by the operator", module="operators")
    return s


def split_subsets(op: LinearOperator, m: int) -> list[LinearOperator]:
    """Partition the output grid rows (angles for the projector) into m
    interleaved subsets: subset k keeps rows k, k+m, k+2m, …"""
    if m < 1:
        raise ConfigurationError(f"number of subsets must be positive, got {m}", module="operators")
    if m == 1:
        return [op]
    rows = op.output_shape[0]
    if rows % m:
        raise ConfigurationError(f"{m} subsets do not divide the {rows} output rows", module="operators")
    return [op.restrict_rows(k, m) for k in range(m)]


def split_measurement(y: np.ndarray, op: LinearOperator, m: int) -> list[np.ndarray]:
    """Bins of y matching each operator returned by split_subsets(op, m)."""
    if m == 1:
        return [y]
    grid = np.asarray(y).reshape(op.output_shape)
    return [grid[k::m].ravel() for k in range(m)]


def scaled(op: LinearOperator, factor: float) -> ScaledOperator:
    return ScaledOperator(op, factor)


def normalized(op: LinearOperator) -> tuple[ScaledOperator, float]:
    """Divide A by its largest sensitivity; returns the operator and the factor."""
    factor = 1.0 / float(np.max(op.backprojected_ones))
    logger.info("Normalizing operator", extra={"scale": factor})
    return ScaledOperator(op, factor), factor


# -------------------------------
# Kernels
# -------------------------------

def gaussian_kernel(size: int, std: float) -> Kernel:
    """Sampled, mass-preserving isotropic Gaussian."""
    if size < 1 or size % 2 == 0:
        raise ConfigurationError(f"kernel size must be odd and positive, got {size}", module="operators")
    if not std > 0:
        raise ConfigurationError(f"kernel std must be positive, got {std}", module="operators")
    r = np.arange(size) - size // 2
    g = np.exp(-(r ** 2) / (2.0 * std ** 2))
    w = np.outer(g, g)
    return Kernel(w / w.sum())


def box_kernel(size: int) -> Kernel:
    if size < 1 or size % 2 == 0:
        raise ConfigurationError(f"kernel size must be odd and positive, got {size}", module="operators")
    return Kernel(np.full((size, size), 1.0 / (size * size)))


def load_kernel(path) -> Kernel:
    """Plain text: '<width> <height>' then width·height reals, row-major."""
    path = Path(path)
    try:
        tokens = path.read_text(encoding="utf-8").split()
    except OSError as e:
        raise RasterIOError(f"cannot read kernel file {path}: {e}", module="operators") from e
    try:
        width, height = int(tokens[0]), int(tokens[1])
        weights = [float(t) for t in tokens[2:]]
    except (IndexError, ValueError) as e:
        raise RasterFormatError(f"malformed kernel file {path}: {e}", module="operators") from e
    if len(weights) != width * height:
        raise RasterFormatError(
            f"kernel file {path} declares {width}x{height} but holds {len(weights)} weights",
            module="operators",
        )
    return Kernel.from_flat(width, height, weights)


def save_kernel(path, kernel: Kernel) -> None:
    lines = [f"{kernel.width} {kernel.height}"]
    lines += [" ".join(f"{w:.17g}" for w in row) for row in kernel.weights]
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise RasterIOError(f"cannot write kernel file {path}: {e}", module="operators") from e
