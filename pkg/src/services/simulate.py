"""Seeded Poisson and Poisson–Gaussian measurement simulation.

Randomness comes from numpy's counter-based Philox bit generator. The seed
is expanded with `SeedSequence` into two independent streams, one for the
Poisson counts and one for the Gaussian noise, so that the counts for a
given seed are the same with or without electronic noise. numpy's Poisson
sampler is exact (multiplication method) for means below 10 and uses the
PTRS transformed-rejection method above.
"""
import logging

import numpy as np

from src.models.errors import DomainError
from src.models.noise import NoiseSpec
from src.models.raster import BinsLike, as_bins

logger = logging.getLogger(__name__)


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    poisson_seq, gauss_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.Philox(poisson_seq)), np.random.Generator(np.random.Philox(gauss_seq))


def _checked_mean(mean: BinsLike) -> np.ndarray:
    m = as_bins(mean)
    if np.any(m < 0) or not np.all(np.isfinite(m)):
        raise DomainError("Poisson mean must be finite and nonnegative", module="simulate")
    return m


def sample_poisson(mean: BinsLike, spec: NoiseSpec, scaled: bool = False) -> np.ndarray:
    """Counts k ~ Poisson(ζ·mean); with `scaled`, the observation k/ζ."""
    m = _checked_mean(mean)
    rng, _ = _streams(spec.seed)
    counts = rng.poisson(spec.zeta * m).astype(np.float64)
    logger.debug("Sampled Poisson counts", extra={"bins": m.size, "total": float(counts.sum())})
    return counts / spec.zeta if scaled else counts


def sample_poisson_gaussian(mean: BinsLike, spec: NoiseSpec) -> np.ndarray:
    """z = k/ζ + ε with ε ~ N(0, σ²); bins may be negative."""
    m = _checked_mean(mean)
    poisson_rng, gauss_rng = _streams(spec.seed)
    z = poisson_rng.poisson(spec.zeta * m).astype(np.float64) / spec.zeta
    if spec.gauss_sigma > 0:
        z = z + gauss_rng.normal(0.0, spec.gauss_sigma, size=m.size)
    return z


def shifted_poisson_preprocess(z: BinsLike, gauss_sigma: float) -> np.ndarray:
    """ŷ = max(z + σ², 0), the data of the shifted-Poisson approximation."""
    return np.maximum(as_bins(z) + gauss_sigma ** 2, 0.0)


def gaussian_sigma_from_relative(mean: BinsLike, fraction: float) -> float:
    """Electronic noise σ given as a fraction of the global mean signal."""
    if fraction < 0:
        raise DomainError(f"relative noise level must be nonnegative, got {fraction}", module="simulate")
    return float(fraction * np.mean(_checked_mean(mean)))
