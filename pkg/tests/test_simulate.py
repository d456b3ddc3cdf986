import numpy as np
import pytest

from src.models import DomainError, NoiseSpec
from src.services.simulate import (
    gaussian_sigma_from_relative,
    sample_poisson,
    sample_poisson_gaussian,
    shifted_poisson_preprocess,
)


def test_zero_mean_gives_zero_counts():
    assert not np.any(sample_poisson(np.zeros(50), NoiseSpec(zeta=5.0, seed=1)))


def test_same_seed_same_counts():
    mean = np.linspace(0.0, 4.0, 200)
    spec = NoiseSpec(zeta=5.0, seed=42)
    assert np.array_equal(sample_poisson(mean, spec), sample_poisson(mean, spec))
    assert not np.array_equal(sample_poisson(mean, spec), sample_poisson(mean, NoiseSpec(zeta=5.0, seed=43)))


def test_counts_are_nonnegative_integers():
    k = sample_poisson(np.full(1000, 0.7), NoiseSpec(zeta=5.0, seed=3))
    assert np.all(k >= 0)
    assert np.array_equal(k, np.floor(k))


def test_poisson_empirical_mean_within_three_standard_errors():
    zeta, mean = 5.0, 10.0  # ζ·mean = 50
    n = 100_000
    y = sample_poisson(np.full(n, mean), NoiseSpec(zeta=zeta, seed=2024), scaled=True)
    standard_error = np.sqrt(zeta * mean) / zeta / np.sqrt(n)
    assert abs(y.mean() - mean) <= 3 * standard_error


def test_negative_mean_is_rejected():
    with pytest.raises(DomainError):
        sample_poisson(np.array([1.0, -0.1]), NoiseSpec(zeta=1.0))


def test_zero_gaussian_reduces_to_scaled_poisson():
    mean = np.linspace(0.0, 3.0, 500)
    spec = NoiseSpec(zeta=5.0, gauss_sigma=0.0, seed=9)
    assert np.array_equal(sample_poisson_gaussian(mean, spec), sample_poisson(mean, spec, scaled=True))


def test_poisson_gaussian_variance():
    zeta, mean, sigma = 5.0, 2.0, 0.5
    z = sample_poisson_gaussian(np.full(100_000, mean), NoiseSpec(zeta=zeta, gauss_sigma=sigma, seed=5))
    assert z.var() == pytest.approx(mean / zeta + sigma ** 2, abs=0.02)
    assert np.any(z < 0)


def test_zero_mean_poisson_gaussian_is_pure_gaussian():
    z = sample_poisson_gaussian(np.zeros(100_000), NoiseSpec(zeta=5.0, gauss_sigma=1.0, seed=6))
    assert z.mean() == pytest.approx(0.0, abs=0.02)
    assert z.std() == pytest.approx(1.0, abs=0.02)


def test_shifted_poisson_preprocess_examples():
    assert shifted_poisson_preprocess(np.array([-0.5, 2.0]), 0.5).tolist() == [0.0, 2.25]
    z = np.array([0.0, 1.5, 3.0])
    assert np.array_equal(shifted_poisson_preprocess(z, 0.0), z)
    assert shifted_poisson_preprocess(np.array([-3.0]), 1.0).tolist() == [0.0]


def test_relative_gaussian_level_uses_global_mean():
    assert gaussian_sigma_from_relative(np.array([1.0, 3.0]), 0.01) == pytest.approx(0.02)
