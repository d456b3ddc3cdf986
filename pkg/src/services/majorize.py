"""EM tangent majorant of the Poisson NLL, its minimizer and its prox.

The majorant anchored at x̃ is kept in separable form

    F(x, x̃) = Σ_k s_k·x_k − t_k·log x_k + C(x̃),

with s = Aᵀ1, t = x̃·Aᵀ(y / (Ax̃ + b)) and C chosen so that F(x̃, x̃) = f(x̃).
"""
import math
from dataclasses import dataclass

import numpy as np

from src.models.errors import DegenerateOperatorError, DomainError, SingularAnchorError
from src.models.raster import RasterLike, as_image
from src.services.objective import PoissonNLL, nll_from_projection


@dataclass(frozen=True)
class SurrogateContext:
    anchor: np.ndarray
    anchor_projection: np.ndarray  # (Ax̃)_i + b
    em_numerator: np.ndarray  # t
    sensitivity: np.ndarray  # s
    anchor_value: float  # f(x̃)
    constant: float  # C(x̃)


def _separable(s: np.ndarray, t: np.ndarray, x: np.ndarray) -> float:
    active = t > 0
    if np.any(x[active] <= 0):
        return math.inf
    log_term = np.zeros_like(x)
    log_term[active] = t[active] * np.log(x[active])
    return float(np.sum(s * x - log_term))


def build_context(nll: PoissonNLL, anchor: RasterLike) -> SurrogateContext:
    x = np.array(as_image(anchor, nll.op.image_shape), copy=True)
    if np.any(x < 0):
        raise DomainError("anchor has negative entries", module="majorize")
    projection = nll.projection(x)
    counted = nll.y > 0
    if np.any(projection[counted] <= 0):
        raise SingularAnchorError(
            f"anchor projects to zero on {int(np.count_nonzero(projection[counted] <= 0))} bin(s) with positive counts",
            module="majorize",
        )
    # Bins with y_i = 0 contribute nothing to the ratio.
    ratio = np.zeros_like(projection)
    ratio[counted] = nll.y[counted] / projection[counted]
    t = x * nll.op.adjoint(ratio)
    s = nll.op.backprojected_ones
    value = nll_from_projection(nll.y, projection)
    constant = value - _separable(s, t, x)
    for arr in (x, projection, t):
        arr.setflags(write=False)
    return SurrogateContext(
        anchor=x,
        anchor_projection=projection,
        em_numerator=t,
        sensitivity=s,
        anchor_value=value,
        constant=constant,
    )


def surrogate_eval(ctx: SurrogateContext, x: RasterLike) -> float:
    image = as_image(x, ctx.anchor.shape)
    if np.any(image < 0):
        raise DomainError("raster has negative entries", module="majorize")
    return _separable(ctx.sensitivity, ctx.em_numerator, image) + ctx.constant


def surrogate_argmin(ctx: SurrogateContext) -> np.ndarray:
    """x⁺ = t / s: one MLEM (Richardson–Lucy) step from the anchor."""
    if np.any(ctx.sensitivity <= 0):
        raise DegenerateOperatorError("zero sensitivity, pixel unseen by the operator", module="majorize")
    return ctx.em_numerator / ctx.sensitivity


def positive_root(d: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Nonnegative root of x² − d·x − c = 0 for c ≥ 0, without cancellation."""
    root = np.sqrt(d * d + 4.0 * c)
    denominator = np.where(d < 0, root - d, 1.0)
    return np.where(d >= 0, 0.5 * (d + root), 2.0 * c / denominator)


def surrogate_prox(ctx: SurrogateContext, u: RasterLike, tau: float) -> np.ndarray:
    """argmin_{x ≥ 0} F(x, x̃) + ‖x − u‖²/(2τ), coordinate-wise in closed form."""
    if not tau > 0:
        raise DomainError(f"prox step must be positive, got {tau}", module="majorize")
    point = as_image(u, ctx.anchor.shape)
    return positive_root(point - tau * ctx.sensitivity, tau * ctx.em_numerator)
