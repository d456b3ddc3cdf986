"""Data fidelity f, explicit regularizers g and the composite h = f + λg."""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from src.models.errors import ConfigurationError, DimensionError, DomainError
from src.models.kernel import Kernel
from src.models.operator import LinearOperator
from src.models.raster import BinsLike, RasterLike, as_bins, as_image
from src.services.operators import gaussian_kernel


# -------------------------------
# Poisson negative log-likelihood
# -------------------------------

@dataclass(frozen=True)
class PoissonNLL:
    """f(x) = Σ_i (Ax)_i + b − y_i·log((Ax)_i + b); b = σ² for shifted-Poisson data."""

    y: np.ndarray
    op: LinearOperator
    background: float = 0.0

    def __post_init__(self):
        y = np.array(as_bins(self.y), dtype=np.float64, copy=True)
        if y.size != self.op.output_length:
            raise DimensionError(
                f"{y.size} measurement bins for an operator with {self.op.output_length} outputs",
                module="objective",
            )
        if np.any(y < 0) or not np.all(np.isfinite(y)):
            raise DomainError("measurements must be finite and nonnegative", module="objective")
        if not self.background >= 0:
            raise DomainError(f"background must be nonnegative, got {self.background}", module="objective")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    def projection(self, x: np.ndarray) -> np.ndarray:
        """(Ax)_i + b."""
        return self.op.apply(x) + self.background


def nll_from_projection(y: np.ndarray, projection: np.ndarray) -> float:
    """Σ q_i − y_i log q_i with 0·log 0 = 0 and +∞ when y_i > 0 = q_i."""
    counted = y > 0
    if np.any(projection[counted] <= 0):
        return math.inf
    log_term = np.zeros_like(projection)
    log_term[counted] = y[counted] * np.log(projection[counted])
    return float(np.sum(projection - log_term))


def _nonnegative(x: RasterLike, shape, module: str) -> np.ndarray:
    image = as_image(x, shape)
    if np.any(image < 0):
        raise DomainError("raster has negative entries", module=module)
    return image


def nll_eval(nll: PoissonNLL, x: RasterLike) -> float:
    image = _nonnegative(x, nll.op.image_shape, "objective")
    return nll_from_projection(nll.y, nll.projection(image))


# -------------------------------
# Gradient-step regularizers
# -------------------------------

class GradStepRegularizer(ABC):
    """Explicit regularizer g_σ with an L-Lipschitz gradient.

    Its gradient step D_σ = Id − τ∇g_σ is the denoiser plugged into the
    solvers (see `gs_denoise`).
    """

    name = "regularizer"

    def __init__(self, sigma: float, lipschitz_bound: float):
        self.sigma = float(sigma)
        self.lipschitz_bound = float(lipschitz_bound)

    @abstractmethod
    def evaluate(self, x: np.ndarray) -> float:
        ...

    @abstractmethod
    def grad(self, x: np.ndarray) -> np.ndarray:
        ...

    def describe(self) -> dict:
        return {"name": self.name, "sigma": self.sigma, "lipschitz_bound": self.lipschitz_bound}


class ZeroRegularizer(GradStepRegularizer):
    """g ≡ 0: the solvers reduce to their unregularized forms."""

    name = "none"

    def __init__(self):
        super().__init__(sigma=0.0, lipschitz_bound=1.0)

    def evaluate(self, x):
        return 0.0

    def grad(self, x):
        return np.zeros_like(as_image(x))


class LinearSmootherRegularizer(GradStepRegularizer):
    """g(x) = ‖x − Bx‖² with B the periodic convolution by a smoothing kernel."""

    name = "linear_smoother"

    def __init__(self, kernel: Kernel, sigma: float, image_shape: tuple[int, int]):
        if abs(kernel.total - 1.0) > 1e-12:
            raise ConfigurationError(
                f"smoother kernel must preserve mass (sum 1), got sum {kernel.total!r}", module="objective"
            )
        if not kernel.is_symmetric():
            raise ConfigurationError("smoother kernel must be symmetric", module="objective")
        height, width = image_shape
        if kernel.height > height or kernel.width > width:
            raise DimensionError("smoother kernel larger than the image", module="objective")
        self.kernel = kernel
        self.image_shape = (int(height), int(width))
        super().__init__(sigma, 2.0 * float(np.max(np.abs(1.0 - self.symbol())) ** 2))

    def symbol(self) -> np.ndarray:
        """Discrete Fourier symbol of B on the image grid."""
        embedded = np.zeros(self.image_shape)
        kh, kw = self.kernel.weights.shape
        embedded[:kh, :kw] = self.kernel.weights
        embedded = np.roll(embedded, (-(kh // 2), -(kw // 2)), axis=(0, 1))
        return np.fft.fft2(embedded)

    def _smooth(self, x):
        return ndimage.convolve(x, self.kernel.weights, mode="wrap")

    def _residual(self, x):
        image = as_image(x, self.image_shape)
        return image - self._smooth(image)

    def evaluate(self, x):
        r = self._residual(x)
        return float(np.sum(r * r))

    def grad(self, x):
        r = self._residual(x)
        # (I − B)ᵀ r with Bᵀ the correlation by the kernel.
        return 2.0 * (r - ndimage.correlate(r, self.kernel.weights, mode="wrap"))

    def describe(self):
        return {**super().describe(), "kernel_shape": list(self.kernel.weights.shape)}


class SmoothedTVRegularizer(GradStepRegularizer):
    """g(x) = Σ √(dx² + dy² + ε²) − ε with periodic forward differences."""

    name = "smoothed_tv"

    def __init__(self, epsilon: float, sigma: float | None = None):
        if not epsilon > 0:
            raise ConfigurationError(f"TV smoothing must be positive, got {epsilon}", module="objective")
        self.epsilon = float(epsilon)
        super().__init__(epsilon if sigma is None else sigma, 8.0 / self.epsilon)

    def _differences(self, x):
        image = as_image(x)
        dx = np.roll(image, -1, axis=1) - image
        dy = np.roll(image, -1, axis=0) - image
        return dx, dy

    def evaluate(self, x):
        dx, dy = self._differences(x)
        return float(np.sum(np.sqrt(dx * dx + dy * dy + self.epsilon ** 2) - self.epsilon))

    def grad(self, x):
        dx, dy = self._differences(x)
        norm = np.sqrt(dx * dx + dy * dy + self.epsilon ** 2)
        px, py = dx / norm, dy / norm
        return (np.roll(px, 1, axis=1) - px) + (np.roll(py, 1, axis=0) - py)

    def describe(self):
        return {**super().describe(), "epsilon": self.epsilon}


def linear_smoother_regularizer(kernel: Kernel, sigma: float, image_shape: tuple[int, int]) -> LinearSmootherRegularizer:
    return LinearSmootherRegularizer(kernel, sigma, image_shape)


def smoothed_tv_regularizer(epsilon: float, sigma: float | None = None) -> SmoothedTVRegularizer:
    return SmoothedTVRegularizer(epsilon, sigma)


def smoother_for_sigma(sigma: float, image_shape: tuple[int, int]) -> LinearSmootherRegularizer:
    """Linear smoother whose Gaussian width in pixels equals σ."""
    if not sigma > 0:
        raise ConfigurationError("linear smoother needs sigma_denoiser > 0", module="objective")
    size = 2 * math.ceil(3.0 * sigma) + 1
    size = min(size, *[s if s % 2 else s - 1 for s in image_shape])
    return LinearSmootherRegularizer(gaussian_kernel(size, sigma), sigma, image_shape)


def gs_denoise(reg: GradStepRegularizer, x: RasterLike, tau: float) -> np.ndarray:
    """D_σ(x) = x − τ∇g_σ(x)."""
    image = as_image(x)
    if tau == 0:
        return image.copy()
    return image - tau * reg.grad(image)


def composite_eval(nll: PoissonNLL, reg: GradStepRegularizer, lam: float, x: RasterLike) -> float:
    """h(x) = f(x) + λ·g(x)."""
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}", module="objective")
    f = nll_eval(nll, x)
    if lam == 0:
        return f
    return f + lam * reg.evaluate(as_image(x))
