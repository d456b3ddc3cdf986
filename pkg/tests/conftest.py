import os
import sys

# Ensure project root is on sys.path so `import src...` works in tests
ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

# Console-only, quiet logging for the whole suite
os.environ.setdefault("PNPMM_ENV", "test")


import numpy as np
import pytest

from src.models.geometry import ProjectorGeometry
from src.models.kernel import Kernel
from src.models.operator import LinearOperator
from src.services.objective import PoissonNLL
from src.services.operators import ConvolutionOperator, IdentityOperator, RadonOperator


class MatrixOperator(LinearOperator):
    """Dense nonnegative matrix acting on a small raster (test double)."""

    def __init__(self, matrix, image_shape, output_shape=None):
        matrix = np.asarray(matrix, dtype=np.float64)
        super().__init__(image_shape, output_shape or (matrix.shape[0], 1))
        self.matrix = matrix

    def _forward(self, x):
        return self.matrix @ x.ravel()

    def _backward(self, v):
        return (self.matrix.T @ v).reshape(self.image_shape)


class MismatchedAdjointOperator(MatrixOperator):
    """Adjoint built from a perturbed matrix: fails the dot-product test."""

    def _backward(self, v):
        return ((self.matrix + 0.5).T @ v).reshape(self.image_shape)


# Mass-preserving 3×3 blur used by the deblurring fixtures.
BLUR_WEIGHTS = [[0.0, 0.1, 0.0], [0.1, 0.6, 0.1], [0.0, 0.1, 0.0]]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def matrix_operator(rng):
    def build(rows=6, shape=(2, 2)):
        return MatrixOperator(rng.uniform(0.1, 1.0, size=(rows, shape[0] * shape[1])), shape)

    return build


@pytest.fixture
def mismatched_operator(rng):
    return MismatchedAdjointOperator(rng.uniform(0.1, 1.0, size=(6, 4)), (2, 2))


@pytest.fixture
def blur_kernel():
    return Kernel(BLUR_WEIGHTS)


@pytest.fixture
def blur_operator(blur_kernel):
    return ConvolutionOperator(blur_kernel, (16, 16))


@pytest.fixture
def projector():
    geometry = ProjectorGeometry.for_image((16, 16), num_angles=12)
    return RadonOperator(geometry, (16, 16))


@pytest.fixture
def identity_operator():
    return IdentityOperator((8, 8))


@pytest.fixture
def smooth_truth():
    """Positive 16×16 image with smooth structure, values in [0.2, 1]."""
    r = np.arange(16)
    yy, xx = np.meshgrid(r, r, indexing="ij")
    return 0.6 + 0.4 * np.sin(2 * np.pi * yy / 16) * np.cos(2 * np.pi * xx / 16)


@pytest.fixture
def noiseless_blur_nll(blur_operator, smooth_truth):
    return PoissonNLL(blur_operator.apply(smooth_truth), blur_operator)


@pytest.fixture
def noisy_blur_nll(blur_operator, smooth_truth, rng):
    counts = rng.poisson(20.0 * blur_operator.apply(smooth_truth)).astype(np.float64)
    return PoissonNLL(counts, blur_operator)


@pytest.fixture
def noisy_tomo_nll(projector, smooth_truth, rng):
    counts = rng.poisson(5.0 * projector.apply(smooth_truth)).astype(np.float64)
    return PoissonNLL(counts, projector)
