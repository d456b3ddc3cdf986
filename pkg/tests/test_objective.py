import math

import numpy as np
import pytest

from src.models import ConfigurationError, DomainError, Kernel
from src.services.objective import (
    PoissonNLL,
    ZeroRegularizer,
    composite_eval,
    gs_denoise,
    linear_smoother_regularizer,
    nll_eval,
    smoothed_tv_regularizer,
    smoother_for_sigma,
)
from src.services.operators import IdentityOperator

from conftest import BLUR_WEIGHTS

LAPLACE_SMOOTHER = [[0.0, 0.125, 0.0], [0.125, 0.5, 0.125], [0.0, 0.125, 0.0]]


def _scalar_nll(y):
    return PoissonNLL(np.array([float(y)]), IdentityOperator((1, 1)))


def _regularizers():
    return [
        linear_smoother_regularizer(Kernel(BLUR_WEIGHTS), 1.0, (16, 16)),
        smoothed_tv_regularizer(0.1),
    ]


# --- Poisson NLL ---

def test_nll_scalar_examples():
    assert nll_eval(_scalar_nll(1), np.array([[1.0]])) == 1.0
    assert nll_eval(_scalar_nll(0), np.array([[2.0]])) == 2.0
    assert nll_eval(_scalar_nll(1), np.array([[0.0]])) == math.inf


def test_nll_rejects_negative_pixels(noiseless_blur_nll):
    x = np.ones((16, 16))
    x[3, 3] = -1e-9
    with pytest.raises(DomainError):
        nll_eval(noiseless_blur_nll, x)


def test_nll_is_midpoint_convex(noisy_blur_nll, rng):
    for _ in range(20):
        a, b = rng.uniform(0.1, 2.0, (2, 16, 16))
        mid = nll_eval(noisy_blur_nll, (a + b) / 2)
        assert mid <= (nll_eval(noisy_blur_nll, a) + nll_eval(noisy_blur_nll, b)) / 2 + 1e-10


def test_composite_with_zero_lambda_is_the_nll(noisy_blur_nll, rng):
    x = rng.uniform(0.1, 1.0, (16, 16))
    reg = smoothed_tv_regularizer(0.1)
    assert composite_eval(noisy_blur_nll, reg, 0.0, x) == nll_eval(noisy_blur_nll, x)
    assert math.isfinite(composite_eval(noisy_blur_nll, reg, 0.3, x))


def test_composite_on_constant_image_with_smoother(noisy_blur_nll):
    reg = linear_smoother_regularizer(Kernel(LAPLACE_SMOOTHER), 1.0, (16, 16))
    x = np.full((16, 16), 0.5)
    assert composite_eval(noisy_blur_nll, reg, 2.0, x) == pytest.approx(nll_eval(noisy_blur_nll, x), abs=1e-12)


# --- regularizers ---

@pytest.mark.parametrize("reg", _regularizers(), ids=["linear_smoother", "smoothed_tv"])
def test_gradient_matches_central_differences(reg, rng):
    h = 1e-6
    for _ in range(5):
        x = rng.random((16, 16))
        d = rng.standard_normal((16, 16))
        numeric = (reg.evaluate(x + h * d) - reg.evaluate(x - h * d)) / (2 * h)
        analytic = float(np.sum(reg.grad(x) * d))
        assert abs(numeric - analytic) <= 1e-5 * abs(analytic)


@pytest.mark.parametrize("reg", _regularizers(), ids=["linear_smoother", "smoothed_tv"])
def test_gradient_is_lipschitz_on_samples(reg, rng):
    for _ in range(10):
        x, z = rng.random((2, 16, 16))
        gap = np.linalg.norm(reg.grad(x) - reg.grad(z))
        assert gap <= reg.lipschitz_bound * np.linalg.norm(x - z) * (1 + 1e-12)


@pytest.mark.parametrize("reg", _regularizers(), ids=["linear_smoother", "smoothed_tv"])
def test_constant_image_is_a_minimizer(reg, rng):
    x = np.full((16, 16), 0.75)
    assert reg.evaluate(x) == pytest.approx(0.0, abs=1e-12)
    assert np.linalg.norm(reg.grad(x)) <= 1e-8
    assert reg.evaluate(rng.random((16, 16))) >= 0


def test_smoother_lipschitz_matches_power_iteration(rng):
    reg = linear_smoother_regularizer(Kernel(LAPLACE_SMOOTHER), 1.0, (8, 8))
    v = rng.standard_normal((8, 8))
    estimate = 0.0
    for _ in range(300):
        w = reg.grad(v)
        estimate = float(np.sum(v * w) / np.sum(v * v))
        v = w / np.linalg.norm(w)
    assert reg.lipschitz_bound == pytest.approx(2.0, abs=1e-12)
    assert estimate == pytest.approx(reg.lipschitz_bound, abs=1e-6)


def test_smoother_requires_mass_preserving_symmetric_kernel():
    with pytest.raises(ConfigurationError):
        linear_smoother_regularizer(Kernel([[0.2, 0.2, 0.2]]), 1.0, (8, 8))
    with pytest.raises(ConfigurationError):
        linear_smoother_regularizer(Kernel([[0.5, 0.3, 0.2]]), 1.0, (8, 8))


def test_smoother_for_sigma_builds_gaussian():
    reg = smoother_for_sigma(1.0, (16, 16))
    assert reg.kernel.width == 7
    assert reg.kernel.total == pytest.approx(1.0, abs=1e-12)


def test_tv_two_pixel_closed_form():
    reg = smoothed_tv_regularizer(1e-6)
    assert reg.evaluate(np.array([[0.0, 1.0]])) == pytest.approx(2.0 - 2e-6, abs=1e-9)
    assert reg.lipschitz_bound == pytest.approx(8e6)


def test_tv_rejects_nonpositive_epsilon():
    with pytest.raises(ConfigurationError):
        smoothed_tv_regularizer(0.0)


# --- gradient-step denoiser ---

def test_gs_denoise_trivial_cases(rng):
    x = rng.random((16, 16))
    assert np.array_equal(gs_denoise(smoothed_tv_regularizer(0.1), x, 0.0), x)
    assert np.array_equal(gs_denoise(ZeroRegularizer(), x, 0.5), x)
    smoother = linear_smoother_regularizer(Kernel(LAPLACE_SMOOTHER), 1.0, (16, 16))
    assert np.allclose(gs_denoise(smoother, np.full((16, 16), 0.4), 0.5), 0.4, rtol=0, atol=1e-14)


def test_gs_denoise_with_smoother_is_homogeneous(rng):
    reg = linear_smoother_regularizer(Kernel(LAPLACE_SMOOTHER), 1.0, (16, 16))
    x = rng.random((16, 16))
    assert np.array_equal(gs_denoise(reg, 2.0 * x, 0.3), 2.0 * gs_denoise(reg, x, 0.3))
