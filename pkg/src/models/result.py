from dataclasses import dataclass, field
from typing import Optional

from src.models.raster import Raster
from src.models.solver_config import SolverConfig
from src.models.trace import ConvergenceTrace


@dataclass(frozen=True)
class SolveResult:
    """Output of a solver run.

    `reconstruction` is the reported image (background-corrected for
    shifted-Poisson runs); `raw_iterate` keeps the last iterate when it
    differs. `config` is the configuration actually used, with the
    Lipschitz bound resolved.
    """

    reconstruction: Raster
    trace: ConvergenceTrace
    certified: bool
    config: SolverConfig
    metadata: dict = field(default_factory=dict)
    raw_iterate: Optional[Raster] = None
