"""Synthetic ground-truth images with labelled regions."""
from dataclasses import dataclass, field

import numpy as np

from src.models.errors import ConfigurationError
from src.models.raster import Raster
from src.models.roi import RoiMask

MIN_SIZE = 16


@dataclass(frozen=True)
class Phantom:
    image: Raster
    regions: dict[str, RoiMask] = field(default_factory=dict)


def _grid(size: int) -> tuple[np.ndarray, np.ndarray]:
    """Pixel-centre coordinates in [-1, 1], rows then columns."""
    if size < MIN_SIZE:
        raise ConfigurationError(f"phantom size must be at least {MIN_SIZE}, got {size}", module="simulate")
    c = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    return np.meshgrid(c, c, indexing="ij")


def _ellipse(rows, cols, center, radii) -> np.ndarray:
    (r0, c0), (a, b) = center, radii
    return ((rows - r0) / a) ** 2 + ((cols - c0) / b) ** 2 <= 1.0


def disc_phantom(size: int, radius: float = 0.5, value: float = 1.0, background: float = 0.0) -> Phantom:
    """Centred disc; `radius` is a fraction of the half-width."""
    if not 0 < radius <= 1:
        raise ConfigurationError(f"disc radius must be in (0, 1], got {radius}", module="simulate")
    rows, cols = _grid(size)
    inside = _ellipse(rows, cols, (0.0, 0.0), (radius, radius))
    image = np.where(inside, value, background)
    return Phantom(Raster(image), {"disc": RoiMask(inside, "disc")})


def piecewise_constant_phantom(size: int) -> Phantom:
    """Flat regions with sharp edges at several contrasts, values in [0.05, 1]."""
    rows, cols = _grid(size)
    image = np.full((size, size), 0.05)
    body = _ellipse(rows, cols, (0.0, 0.0), (0.85, 0.75))
    block = (np.abs(rows + 0.25) <= 0.2) & (np.abs(cols - 0.2) <= 0.35)
    square = (np.abs(rows - 0.35) <= 0.15) & (np.abs(cols + 0.3) <= 0.15)
    spot = _ellipse(rows, cols, (0.35, 0.35), (0.15, 0.15))
    image[body] = 0.35
    image[block] = 0.6
    image[square] = 1.0
    image[spot] = 0.8
    regions = {
        "body": RoiMask(body & ~block & ~square & ~spot, "body"),
        "block": RoiMask(block, "block"),
        "square": RoiMask(square, "square"),
        "spot": RoiMask(spot, "spot"),
    }
    return Phantom(Raster(image), regions)


def brain_like_phantom(size: int) -> Phantom:
    """Emission-style slice: grey-matter ring, white-matter core, cold
    ventricles and two hot lesions (uptake 0.8 / 0.25 / 0.05 / 1.0)."""
    rows, cols = _grid(size)
    head = _ellipse(rows, cols, (0.0, 0.0), (0.9, 0.75))
    core = _ellipse(rows, cols, (0.0, 0.0), (0.72, 0.58))
    ventricles = _ellipse(rows, cols, (-0.05, -0.15), (0.25, 0.08)) | _ellipse(rows, cols, (-0.05, 0.15), (0.25, 0.08))
    lesions = _ellipse(rows, cols, (0.35, -0.3), (0.12, 0.12)) | _ellipse(rows, cols, (-0.4, 0.25), (0.12, 0.12))

    grey = head & ~core
    white = core & ~ventricles & ~lesions
    image = np.zeros((size, size))
    image[grey] = 0.8
    image[white] = 0.25
    image[core & ventricles] = 0.05
    image[lesions] = 1.0
    regions = {
        "grey": RoiMask(grey & ~lesions, "grey"),
        "white": RoiMask(white, "white"),
        "lesion": RoiMask(lesions, "lesion"),
    }
    return Phantom(Raster(image), regions)


PHANTOMS = {
    "piecewise": piecewise_constant_phantom,
    "disc": disc_phantom,
    "brain": brain_like_phantom,
}


def make_phantom(name: str, size: int) -> Phantom:
    try:
        builder = PHANTOMS[name]
    except KeyError:
        raise ConfigurationError(f"unknown phantom '{name}', expected one of {sorted(PHANTOMS)}", module="simulate") from None
    return builder(size)
