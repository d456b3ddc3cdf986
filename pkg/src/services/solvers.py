"""MLEM, OSEM, Majorized Forward-Backward and PnP-MM.

Every solver starts from the all-ones image, keeps its iterate private and
checks after each update that no pixel went negative.
"""
import logging
from typing import Callable, Optional

import numpy as np

from src.models.errors import ConfigurationError, DomainError
from src.models.raster import Raster, RasterLike, as_image
from src.models.result import SolveResult
from src.models.solver_config import SolverConfig
from src.models.trace import ConvergenceTrace, TraceRecord
from src.services.majorize import build_context, surrogate_argmin, surrogate_prox
from src.services.metrics import psnr
from src.services.objective import (
    GradStepRegularizer,
    PoissonNLL,
    gs_denoise,
    nll_eval,
)
from src.services.operators import sensitivity, split_measurement, split_subsets

logger = logging.getLogger(__name__)

Denoiser = Callable[[np.ndarray], np.ndarray]

EARLY_STOP_RATIO = 1e-14


def _check_iterate(x: np.ndarray, solver: str, n: int) -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError(f"iterate {n} has non-finite entries", module=solver)
    if np.any(x < 0):
        raise DomainError(f"iterate {n} has negative entries", module=solver)


def _psnr_or_none(truth: Optional[np.ndarray], x: np.ndarray, peak: float) -> Optional[float]:
    return None if truth is None else psnr(truth, x, peak)


def _should_stop(config: SolverConfig, residual: float, x: np.ndarray) -> bool:
    return config.early_stop and residual < EARLY_STOP_RATIO * float(np.sum(x * x))


def _truth_array(truth: Optional[RasterLike], shape) -> Optional[np.ndarray]:
    return None if truth is None else as_image(truth, shape)


def _with_background(nll: PoissonNLL, config: SolverConfig) -> PoissonNLL:
    """Apply `config.background` (σ²) to an NLL built without one."""
    if config.background == 0 or config.background == nll.background:
        return nll
    if nll.background != 0:
        raise ConfigurationError(
            f"solver background {config.background} conflicts with the data model background {nll.background}",
            module="solve",
        )
    return PoissonNLL(nll.y, nll.op, config.background)


def _metadata(solver: str, nll: PoissonNLL, config: SolverConfig, certified: bool, **extra) -> dict:
    return {
        "solver": solver,
        "certified": certified,
        "config": config.model_dump(by_alias=True),
        "operator": nll.op.describe(),
        "background": nll.background,
        **extra,
    }


# -------------------------------
# EM family
# -------------------------------

def _em_loop(
    solver: str,
    nll: PoissonNLL,
    subset_nlls: list[PoissonNLL],
    config: SolverConfig,
    truth: Optional[RasterLike],
    peak: float,
) -> SolveResult:
    for sub in subset_nlls:
        sensitivity(sub.op)
    reference = _truth_array(truth, nll.op.image_shape)
    x = np.ones(nll.op.image_shape)
    f0 = nll_eval(nll, x)
    trace = ConvergenceTrace(TraceRecord(0, f0, 0.0, f0, psnr=_psnr_or_none(reference, x, peak)))
    logger.info(f"[{solver}] start: {config.iterations} iterations, {len(subset_nlls)} subset(s)")

    for n in range(1, config.iterations + 1):
        previous = x
        for sub in subset_nlls:
            x = surrogate_argmin(build_context(sub, x))
            _check_iterate(x, solver, n)
        f = nll_eval(nll, x)
        residual = float(np.sum((x - previous) ** 2))
        trace.append(TraceRecord(n, f, 0.0, f, residual, _psnr_or_none(reference, x, peak)))
        logger.debug(f"[{solver}] iteration {n}: f={f:.17g} residual_sq={residual:.3e}")
        if _should_stop(config, residual, x):
            logger.info(f"[{solver}] early stop at iteration {n}")
            break

    logger.info(f"[{solver}] done: f={trace.records[-1].f_value:.17g}")
    return SolveResult(
        reconstruction=Raster(x),
        trace=trace,
        certified=False,
        config=config,
        metadata=_metadata(solver, nll, config, False, subsets=len(subset_nlls)),
    )


def mlem_run(
    nll: PoissonNLL,
    config: Optional[SolverConfig] = None,
    truth: Optional[RasterLike] = None,
    peak: float = 1.0,
) -> SolveResult:
    """x⁺ = (x/s)·Aᵀ(y/(Ax + b)) from x⁽⁰⁾ = 1."""
    config = config or SolverConfig()
    nll = _with_background(nll, config)
    return _em_loop("mlem", nll, [nll], config, truth, peak)


def osem_run(
    nll: PoissonNLL,
    config: Optional[SolverConfig] = None,
    truth: Optional[RasterLike] = None,
    peak: float = 1.0,
) -> SolveResult:
    """MLEM updates cycling over interleaved subsets in ascending order; one
    trace record per full cycle."""
    config = config or SolverConfig()
    nll = _with_background(nll, config)
    m = config.subsets
    if m == 1:
        subset_nlls = [nll]
    else:
        sensitivity(nll.op)
        ops = split_subsets(nll.op, m)
        unseen = [k for k, op_k in enumerate(ops) if np.any(op_k.backprojected_ones <= 0)]
        if unseen:
            raise ConfigurationError(
                f"{m} subsets leave pixels unseen by subset(s) {unseen}; use fewer subsets",
                module="solve",
            )
        ys = split_measurement(nll.y, nll.op, m)
        subset_nlls = [PoissonNLL(y_k, op_k, nll.background) for y_k, op_k in zip(ys, ops)]
    return _em_loop("osem", nll, subset_nlls, config, truth, peak)


# -------------------------------
# Regularized solvers
# -------------------------------

def _resolve(config: SolverConfig, reg: GradStepRegularizer) -> SolverConfig:
    if config.lipschitz_bound is not None:
        return config
    return config.model_copy(update={"lipschitz_bound": reg.lipschitz_bound})


def _certify(solver: str, config: SolverConfig, reasons: list[str]) -> bool:
    if config.data_tau is not None:
        reasons.append("split data step size")
    product = config.step_product(config.lipschitz_bound)
    if product >= 1:
        reasons.append(f"tau*lambda*L = {product:.6g} >= 1")
    if reasons:
        logger.warning(f"[{solver}] run is uncertified: {'; '.join(reasons)}")
        return False
    return True


def _regularized_loop(
    solver: str,
    nll: PoissonNLL,
    reg: GradStepRegularizer,
    config: SolverConfig,
    step: Callable,
    truth: Optional[RasterLike],
    peak: float,
):
    sensitivity(nll.op)
    reference = _truth_array(truth, nll.op.image_shape)
    lam = config.lam
    x = np.ones(nll.op.image_shape)
    ctx = build_context(nll, x)
    g = reg.evaluate(x)
    trace = ConvergenceTrace(
        TraceRecord(0, ctx.anchor_value, g, ctx.anchor_value + lam * g, psnr=_psnr_or_none(reference, x, peak))
    )
    logger.info(f"[{solver}] start: {config.iterations} iterations, tau={config.tau}, lambda={lam}, L={config.lipschitz_bound}")

    for n in range(1, config.iterations + 1):
        x_new = step(x, ctx)
        _check_iterate(x_new, solver, n)
        ctx = build_context(nll, x_new)
        g = reg.evaluate(x_new)
        residual = float(np.sum((x_new - x) ** 2))
        h = ctx.anchor_value + lam * g
        trace.append(TraceRecord(n, ctx.anchor_value, g, h, residual, _psnr_or_none(reference, x_new, peak)))
        logger.debug(f"[{solver}] iteration {n}: h={h:.17g} residual_sq={residual:.3e}")
        x = x_new
        if _should_stop(config, residual, x):
            logger.info(f"[{solver}] early stop at iteration {n}")
            break

    logger.info(f"[{solver}] done: h={trace.records[-1].h_value:.17g}")
    return x, trace


def mfb_run(
    nll: PoissonNLL,
    reg: GradStepRegularizer,
    config: SolverConfig,
    truth: Optional[RasterLike] = None,
    peak: float = 1.0,
) -> SolveResult:
    """Majorized Forward-Backward: x⁺ = prox_{τF(·,x)}(x − τλ∇g(x))."""
    config = _resolve(config, reg)
    nll = _with_background(nll, config)
    certified = _certify("mfb", config, [])
    data_step = config.data_tau or config.tau

    def step(x, ctx):
        u = x - config.tau * config.lam * reg.grad(x)
        return surrogate_prox(ctx, u, data_step)

    x, trace = _regularized_loop("mfb", nll, reg, config, step, truth, peak)
    return SolveResult(
        reconstruction=Raster(x),
        trace=trace,
        certified=certified,
        config=config,
        metadata=_metadata("mfb", nll, config, certified, regularizer=reg.describe()),
    )


def pnp_mm_run(
    nll: PoissonNLL,
    reg: GradStepRegularizer,
    config: SolverConfig,
    truth: Optional[RasterLike] = None,
    peak: float = 1.0,
    denoiser: Optional[Denoiser] = None,
) -> SolveResult:
    """Two-step PnP-MM iteration.

    x½ = λτ·D(x) + (1 − λτ)·x with D = Id − ∇g (or an external denoiser),
    then x⁺ = ½[x½ − τs + √((x½ − τs)² + 4τ·s·x_EM)] where s·x_EM is the EM
    numerator of the majorant.

    The majorant is anchored at the current iterate x⁽ⁿ⁾ unless
    `config.anchor == "half_step"`, which anchors it at max(x½, 0) instead.
    That variant is opt-in and never certified, as are a split `data_tau`
    and an external denoiser. A positive background b = σ² gives the
    shifted-Poisson variant; its reported reconstruction is max(x − σ², 0).
    """
    config = _resolve(config, reg)
    nll = _with_background(nll, config)
    reasons = []
    if denoiser is not None:
        reasons.append("external denoiser")
    if config.anchor == "half_step":
        reasons.append("majorant anchored at the half step")
    certified = _certify("pnp_mm", config, reasons)
    weight = config.lam * config.tau
    data_step = config.data_tau or config.tau

    def step(x, ctx):
        denoised = denoiser(x) if denoiser is not None else gs_denoise(reg, x, 1.0)
        half = weight * denoised + (1.0 - weight) * x
        anchor_ctx = ctx if config.anchor == "iterate" else build_context(nll, np.maximum(half, 0.0))
        return surrogate_prox(anchor_ctx, half, data_step)

    x, trace = _regularized_loop("pnp_mm", nll, reg, config, step, truth, peak)
    raw_iterate = None
    reconstruction = x
    if nll.background > 0:
        raw_iterate = Raster(x)
        reconstruction = np.maximum(x - nll.background, 0.0)
    return SolveResult(
        reconstruction=Raster(reconstruction),
        trace=trace,
        certified=certified,
        config=config,
        metadata=_metadata(
            "pnp_mm",
            nll,
            config,
            certified,
            regularizer=reg.describe(),
            denoiser="external" if denoiser is not None else "gradient-step",
            background_correction=nll.background > 0,
        ),
        raw_iterate=raw_iterate,
    )


def final_denoise(result: SolveResult, reg: GradStepRegularizer, tau: float) -> Raster:
    """One gradient-step denoising of the reconstruction, clamped at 0.

    Post-processing only: recorded in the metadata, never in the trace.
    """
    denoised = np.maximum(gs_denoise(reg, result.reconstruction, tau), 0.0)
    result.metadata.setdefault("post_processing", []).append(
        {"step": "final_denoise", "tau": tau, "regularizer": reg.name}
    )
    return Raster(denoised)
