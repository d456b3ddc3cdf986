"""Image-quality metrics: PSNR, SSIM, MAE, NRMSE and CNR."""
import math

import numpy as np
from scipy import ndimage

from src.models.errors import DimensionError, UndefinedMetricError
from src.models.raster import RasterLike, as_image
from src.models.roi import RoiMask

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_SIGMA = 1.5
SSIM_WINDOW = 11
# Window radius 5 = int(3.5·1.5 + 0.5).
SSIM_TRUNCATE = 3.5

NRMSE_CONVENTION = "l2 norm of error / l2 norm of truth"


def _pair(truth: RasterLike, estimate: RasterLike) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_image(truth), as_image(estimate)
    if a.shape != b.shape:
        raise DimensionError(f"image shapes differ: {a.shape} vs {b.shape}", module="metrics")
    return a, b


def _check_roi(roi: RoiMask, shape) -> np.ndarray:
    if roi.mask.shape != shape:
        raise DimensionError(
            f"ROI '{roi.label}' shape {roi.mask.shape} does not match image {shape}", module="metrics"
        )
    return roi.mask


def psnr(truth: RasterLike, estimate: RasterLike, peak: float = 1.0) -> float:
    """10·log10(peak²/MSE) in dB; +inf when the images are identical."""
    a, b = _pair(truth, estimate)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def ssim(truth: RasterLike, estimate: RasterLike, peak: float = 1.0) -> float:
    """Mean local SSIM, Gaussian 11×11 window (σ = 1.5), population covariances."""
    a, b = _pair(truth, estimate)
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise DimensionError(
            f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape}", module="metrics"
        )

    def window(z):
        return ndimage.gaussian_filter(z, sigma=SSIM_SIGMA, truncate=SSIM_TRUNCATE, mode="reflect")

    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    mu_a, mu_b = window(a), window(b)
    var_a = window(a * a) - mu_a * mu_a
    var_b = window(b * b) - mu_b * mu_b
    cov = window(a * b) - mu_a * mu_b
    local = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
    pad = (SSIM_WINDOW - 1) // 2
    return float(local[pad:-pad, pad:-pad].mean())


def mae(truth: RasterLike, estimate: RasterLike, scale: float = 1.0) -> float:
    """scale·mean|truth − estimate|; scale = 3000 maps [0, 1] to a 3000 HU window."""
    a, b = _pair(truth, estimate)
    return float(scale * np.mean(np.abs(a - b)))


def nrmse(truth: RasterLike, estimate: RasterLike, roi: RoiMask | None = None) -> float:
    """‖estimate − truth‖₂ / ‖truth‖₂, optionally restricted to a region."""
    a, b = _pair(truth, estimate)
    if roi is not None:
        mask = _check_roi(roi, a.shape)
        a, b = a[mask], b[mask]
    norm = float(np.linalg.norm(a))
    if norm == 0:
        raise UndefinedMetricError("NRMSE undefined for a zero-norm truth", module="metrics")
    return float(np.linalg.norm(b - a)) / norm


def cnr(image: RasterLike, roi_a: RoiMask, roi_b: RoiMask) -> float:
    """(mean over roi_a − mean over roi_b) / population std over roi_b."""
    img = as_image(image)
    inside_a = img[_check_roi(roi_a, img.shape)]
    inside_b = img[_check_roi(roi_b, img.shape)]
    if inside_b.size < 2:
        raise UndefinedMetricError(f"ROI '{roi_b.label}' needs at least 2 pixels", module="metrics")
    spread = float(np.std(inside_b))
    if spread == 0:
        raise UndefinedMetricError(f"ROI '{roi_b.label}' has zero standard deviation", module="metrics")
    return (float(np.mean(inside_a)) - float(np.mean(inside_b))) / spread
