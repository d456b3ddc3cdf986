"""Convergence checks on a finished run."""
import logging
from typing import Optional

import numpy as np

from src.models.errors import ConfigurationError
from src.models.raster import RasterLike, as_image
from src.models.solver_config import SolverConfig
from src.models.trace import ConvergenceTrace
from src.services.majorize import build_context, surrogate_prox
from src.services.objective import GradStepRegularizer, PoissonNLL

logger = logging.getLogger(__name__)


def monotonicity_check(trace: ConvergenceTrace, tol: float = 1e-10) -> bool:
    """True iff h never increases by more than `tol`, starting from h(x⁽⁰⁾)."""
    if len(trace) == 0:
        raise ConfigurationError("cannot check an empty trace", module="solve")
    increments = np.diff(trace.h_values)
    ok = bool(np.all(increments <= tol))
    if not ok:
        worst = int(np.nanargmax(np.where(np.isnan(increments), np.inf, increments)))
        logger.warning(f"[monotonicity_check] h increased at iteration {worst + 1}: {increments[worst]!r}")
    return ok


def rate_check(trace: ConvergenceTrace, config: SolverConfig, tol: float = 1e-10) -> Optional[bool]:
    """min_{n≤N} ‖x⁽ⁿ⁾ − x⁽ⁿ⁻¹⁾‖² ≤ (h(x⁽⁰⁾) − min h + tol) / (N·(1/(2τ) − λL/2)) for all N.

    Returns None when the bound does not apply: no Lipschitz bound, a split
    data step, or τλL ≥ 1.
    """
    if len(trace) == 0:
        raise ConfigurationError("cannot check an empty trace", module="solve")
    lipschitz = config.lipschitz_bound
    if lipschitz is None or not config.is_certifiable(lipschitz):
        return None
    c = 1.0 / (2.0 * config.tau) - config.lam * lipschitz / 2.0
    h = trace.h_values
    best = np.minimum.accumulate(trace.residuals)
    n = np.arange(1, len(trace) + 1)
    bound = (h[0] - np.min(h) + tol) / (n * c)
    return bool(np.all(best <= bound))


def stationarity_gap(
    nll: PoissonNLL,
    reg: GradStepRegularizer,
    config: SolverConfig,
    x: RasterLike,
) -> float:
    """‖x − prox_{τF(·,x)}(x − τλ∇g(x))‖ / max(‖x‖, 1).

    Zero exactly at fixed points of the majorized forward-backward map, which
    are the critical points of h = f + λg.
    """
    image = as_image(x, nll.op.image_shape)
    ctx = build_context(nll, image)
    step = image - config.tau * config.lam * reg.grad(image)
    mapped = surrogate_prox(ctx, step, config.tau)
    return float(np.linalg.norm(image - mapped) / max(np.linalg.norm(image), 1.0))
