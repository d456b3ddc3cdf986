import numpy as np
import pytest

from src.models import ConfigurationError
from src.services.phantoms import PHANTOMS, disc_phantom, make_phantom


@pytest.mark.parametrize("name", sorted(PHANTOMS))
def test_phantoms_are_nonnegative_and_bounded(name):
    phantom = make_phantom(name, 32)
    assert phantom.image.shape == (32, 32)
    assert phantom.image.values.min() >= 0.0
    assert phantom.image.values.max() == pytest.approx(1.0)
    for label, roi in phantom.regions.items():
        assert roi.label == label
        assert roi.mask.shape == (32, 32)
        assert roi.count > 0


@pytest.mark.parametrize("name", sorted(PHANTOMS))
def test_regions_are_flat(name):
    phantom = make_phantom(name, 64)
    for roi in phantom.regions.values():
        assert np.ptp(phantom.image.values[roi.mask]) == 0.0


def test_disc_area():
    phantom = disc_phantom(128, radius=0.5)
    fraction = phantom.regions["disc"].count / 128**2
    assert fraction == pytest.approx(np.pi * 0.25 / 4, rel=0.02)


def test_piecewise_contrasts():
    phantom = make_phantom("piecewise", 64)
    means = {k: phantom.image.values[r.mask].mean() for k, r in phantom.regions.items()}
    assert means == pytest.approx({"body": 0.35, "block": 0.6, "square": 1.0, "spot": 0.8})


def test_rejects_small_or_unknown():
    with pytest.raises(ConfigurationError):
        make_phantom("piecewise", 8)
    with pytest.raises(ConfigurationError):
        make_phantom("shepp", 32)
