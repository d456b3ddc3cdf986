import numpy as np
import pytest
from pydantic import ValidationError

from src.models import (
    ConfigurationError,
    ConvergenceTrace,
    DimensionError,
    Kernel,
    MeasurementVector,
    ProjectorGeometry,
    Raster,
    RoiMask,
    SolverConfig,
    TraceRecord,
)
from src.models.errors import PnPError, RasterFormatError
from src.models.experiment import ExperimentConfig
from src.services.linalg import adjoint_consistency, dot
from src.services.operators import IdentityOperator


def test_dot_examples():
    assert dot([1, 2], [3, 4]) == 11.0
    assert dot([5.0, -2.0, 7.0], np.zeros(3)) == 0.0
    v = np.array([3.5, -1.25, 8.0])
    assert dot(np.eye(3)[1], v) == v[1]


def test_dot_length_mismatch():
    with pytest.raises(DimensionError):
        dot([1, 2, 3], [1, 2])


def test_adjoint_consistency_identity():
    assert adjoint_consistency(IdentityOperator((5, 7)), trials=20, seed=3) <= 1e-12


def test_adjoint_consistency_flags_mismatched_adjoint(mismatched_operator):
    assert adjoint_consistency(mismatched_operator, trials=5, seed=0) > 1e-3


def test_adjoint_consistency_needs_a_trial():
    with pytest.raises(ConfigurationError):
        adjoint_consistency(IdentityOperator((2, 2)), trials=0)


def test_raster_from_flat_is_row_major_and_read_only():
    r = Raster.from_flat(3, 2, [1, 2, 3, 4, 5, 6])
    assert r.shape == (2, 3)
    assert r.width == 3 and r.height == 2
    assert r.values[1, 0] == 4.0
    with pytest.raises(ValueError):
        r.values[0, 0] = 9.0


def test_raster_rejects_wrong_length():
    with pytest.raises(DimensionError):
        Raster.from_flat(3, 2, [1, 2, 3])


def test_operator_rejects_shape_mismatch_before_arithmetic():
    op = IdentityOperator((4, 4))
    with pytest.raises(DimensionError):
        op.apply(np.ones((4, 5)))
    with pytest.raises(DimensionError):
        op.adjoint(MeasurementVector(np.ones(15)))


def test_kernel_validation():
    with pytest.raises(ConfigurationError):
        Kernel(np.ones((2, 3)))
    with pytest.raises(ConfigurationError):
        Kernel([[0.0, -0.1, 0.0]])
    k = Kernel.from_flat(3, 1, [0.25, 0.5, 0.25])
    assert (k.width, k.height) == (3, 1)
    assert k.is_symmetric()


def test_solver_config_alias_and_certification():
    cfg = SolverConfig(**{"lambda": 0.5, "tau": 1.0})
    assert cfg.lam == 0.5
    assert cfg.is_certifiable(1.9)
    assert not cfg.is_certifiable(2.0)
    split = SolverConfig(lam=0.1, data_tau=100.0)
    assert not split.is_certifiable(1.0)
    with pytest.raises(ValidationError):
        SolverConfig(tau=0.0)


def test_experiment_config_rejects_subsets_that_leave_pixels_unseen(tmp_path):
    base = {"solver": "osem", "output_dir": tmp_path}
    with pytest.raises(ValidationError, match="kernel_size"):
        ExperimentConfig(problem="deblur", kernel_size=3, subsets=4, **base)
    with pytest.raises(ValidationError, match="identity"):
        ExperimentConfig(problem="identity", subsets=2, **base)
    assert ExperimentConfig(problem="deblur", kernel_size=3, subsets=3, **base).subsets == 3
    assert ExperimentConfig(problem="tomo", kernel_size=3, subsets=6, **base).subsets == 6


def test_projector_geometry_covers_image():
    geometry = ProjectorGeometry.for_image((16, 16), num_angles=12)
    assert geometry.covers((16, 16))
    assert np.all(np.diff(geometry.angles) > 0)
    assert geometry.angles[-1] < np.pi
    with pytest.raises(ValidationError):
        ProjectorGeometry(num_angles=0, num_detector_bins=10)


def test_trace_keeps_initial_value_apart_from_records():
    trace = ConvergenceTrace(TraceRecord(0, 5.0, 0.0, 5.0))
    trace.append(TraceRecord(1, 4.0, 0.0, 4.0, residual_sq=0.5))
    assert len(trace) == 1
    assert trace.h_values.tolist() == [5.0, 4.0]
    assert trace.residuals.tolist() == [0.5]


def test_roi_mask_must_select_a_pixel():
    with pytest.raises(ConfigurationError):
        RoiMask(np.zeros((3, 3), dtype=bool))
    assert RoiMask(np.eye(3, dtype=bool)).count == 3


def test_errors_carry_module_and_exit_code():
    err = DimensionError("bad shape", module="operators")
    assert str(err) == "[operators] bad shape"
    assert isinstance(err, PnPError)
    assert err.exit_code == 3
    assert ConfigurationError("x").exit_code == 2
    assert RasterFormatError("x").exit_code == 4
