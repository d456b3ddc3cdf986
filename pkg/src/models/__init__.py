from .errors import (
    ConfigurationError,
    DegenerateOperatorError,
    DimensionError,
    DomainError,
    PnPError,
    RasterFormatError,
    RasterIOError,
    SingularAnchorError,
    UndefinedMetricError,
)
from .experiment import ExperimentConfig
from .geometry import ProjectorGeometry
from .kernel import Kernel
from .noise import NoiseSpec
from .operator import LinearOperator
from .raster import MeasurementVector, Raster
from .result import SolveResult
from .roi import RoiMask
from .solver_config import SolverConfig
from .trace import ConvergenceTrace, TraceRecord

__all__ = [
    "ConfigurationError",
    "ConvergenceTrace",
    "DegenerateOperatorError",
    "DimensionError",
    "DomainError",
    "ExperimentConfig",
    "Kernel",
    "LinearOperator",
    "MeasurementVector",
    "NoiseSpec",
    "PnPError",
    "ProjectorGeometry",
    "Raster",
    "RasterFormatError",
    "RasterIOError",
    "RoiMask",
    "SingularAnchorError",
    "SolveResult",
    "SolverConfig",
    "TraceRecord",
    "UndefinedMetricError",
]
