"""Simulate → solve → score pipeline behind the `simulate` and `solve` commands.

Pure-Poisson problems are solved on the raw counts k ~ Poisson(ζ·Ax) and
reported divided by ζ. Poisson–Gaussian problems are solved on the
shifted data ŷ = max(z + σ², 0) with background σ². Metrics are computed in
the solver's domain against the equally scaled truth.
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from src.models.errors import DimensionError, UndefinedMetricError
from src.models.experiment import ExperimentConfig
from src.models.operator import LinearOperator
from src.models.raster import Raster
from src.models.result import SolveResult
from src.models.roi import RoiMask
from src.services import metrics
from src.services.objective import (
    GradStepRegularizer,
    PoissonNLL,
    ZeroRegularizer,
    smoothed_tv_regularizer,
    smoother_for_sigma,
)
from src.services.operators import (
    ConvolutionOperator,
    IdentityOperator,
    RadonOperator,
    gaussian_kernel,
    load_kernel,
    normalized,
)
from src.services.phantoms import Phantom, make_phantom
from src.services.raster_io import load_raster, save_raster, write_metrics_csv, write_trace_csv
from src.services.simulate import (
    gaussian_sigma_from_relative,
    sample_poisson,
    sample_poisson_gaussian,
    shifted_poisson_preprocess,
)
from src.services.solvers import final_denoise, mfb_run, mlem_run, osem_run, pnp_mm_run
from stage_timer import StageTimer

logger = logging.getLogger(__name__)

SSIM_CONVENTION = "gaussian window 11x11 sigma=1.5, K1=0.01, K2=0.03"


@dataclass
class Measurement:
    """Observed data in the domain the solver works in.

    `scale` maps the truth into that domain (ζ for raw counts, 1 otherwise).
    """

    data: np.ndarray
    gauss_sigma: float
    scale: float

    @property
    def background(self) -> float:
        return self.gauss_sigma ** 2

    @property
    def solver_data(self) -> np.ndarray:
        if self.gauss_sigma > 0:
            return shifted_poisson_preprocess(self.data, self.gauss_sigma)
        return self.data


@dataclass
class ExperimentReport:
    result: SolveResult
    metrics: list[tuple[str, float, str]]
    outputs: dict[str, Path] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)


# -------------------------------
# Pipeline pieces
# -------------------------------

def build_operator(cfg: ExperimentConfig, image_shape: tuple[int, int]) -> LinearOperator:
    if cfg.problem == "identity":
        op = IdentityOperator(image_shape)
    elif cfg.problem == "deblur":
        kernel = load_kernel(cfg.kernel_path) if cfg.kernel_path else gaussian_kernel(cfg.kernel_size, cfg.kernel_std)
        op = ConvolutionOperator(kernel, image_shape)
    else:
        op = RadonOperator(cfg.geometry(image_shape), image_shape)
    if cfg.normalize_operator:
        op, _ = normalized(op)
    logger.info(f"[build_operator] {cfg.problem}", extra={"operator": op.describe()})
    return op


def build_regularizer(cfg: ExperimentConfig, image_shape: tuple[int, int]) -> GradStepRegularizer:
    name = cfg.resolved_regularizer
    if name == "linear_smoother":
        return smoother_for_sigma(cfg.sigma_denoiser, image_shape)
    if name == "smoothed_tv":
        return smoothed_tv_regularizer(cfg.tv_epsilon, cfg.sigma_denoiser or None)
    return ZeroRegularizer()


def load_truth(cfg: ExperimentConfig) -> Optional[Phantom]:
    if cfg.truth_path is not None:
        return Phantom(load_raster(cfg.truth_path))
    if cfg.measurement_path is not None:
        return None
    return make_phantom(cfg.phantom, cfg.phantom_size)


def simulate_measurement(cfg: ExperimentConfig, op: LinearOperator, truth: Raster) -> Measurement:
    mean = op.apply(truth)
    sigma = cfg.gauss_sigma
    if cfg.gauss_sigma_relative is not None:
        sigma = gaussian_sigma_from_relative(mean, cfg.gauss_sigma_relative)
    if sigma > 0:
        data = sample_poisson_gaussian(mean, cfg.noise_spec(sigma))
        return Measurement(data, sigma, 1.0)
    data = cfg.zeta * mean if cfg.noiseless else sample_poisson(mean, cfg.noise_spec(0.0))
    return Measurement(data, 0.0, cfg.zeta)


def load_measurement(cfg: ExperimentConfig, op: LinearOperator) -> Measurement:
    grid = load_raster(cfg.measurement_path)
    if grid.shape != op.output_shape:
        raise DimensionError(
            f"measurement grid {grid.shape} does not match the operator output {op.output_shape}", module="cli"
        )
    if cfg.gauss_sigma > 0:
        return Measurement(grid.flat.copy(), cfg.gauss_sigma, 1.0)
    return Measurement(grid.flat.copy(), 0.0, cfg.zeta)


def run_solver(
    cfg: ExperimentConfig,
    nll: PoissonNLL,
    reg: GradStepRegularizer,
    background: float,
    truth: Optional[np.ndarray],
    peak: float,
) -> SolveResult:
    config = cfg.solver_config(background)
    if cfg.solver == "mlem":
        return mlem_run(nll, config, truth, peak)
    if cfg.solver == "osem":
        return osem_run(nll, config, truth, peak)
    if cfg.solver == "mfb":
        return mfb_run(nll, reg, config, truth, peak)
    return pnp_mm_run(nll, reg, config, truth, peak)


def _safe(value_fn) -> float:
    try:
        return value_fn()
    except UndefinedMetricError as e:
        logger.warning(f"[score] {e}")
        return math.nan


def score(
    truth: np.ndarray,
    estimate: np.ndarray,
    peak: float,
    mae_scale: float,
    regions: dict[str, RoiMask],
    prefix: str = "",
) -> list[tuple[str, float, str]]:
    """Metric rows (name, value, convention) for one estimate."""
    rows = [(f"{prefix}psnr", metrics.psnr(truth, estimate, peak), f"peak={peak:.17g}")]
    if min(truth.shape) >= metrics.SSIM_WINDOW:
        rows.append((f"{prefix}ssim", metrics.ssim(truth, estimate, peak), SSIM_CONVENTION))
    rows.append((f"{prefix}mae", metrics.mae(truth, estimate, mae_scale), f"mean abs error x {mae_scale:.17g}"))
    rows.append((f"{prefix}nrmse", _safe(lambda: metrics.nrmse(truth, estimate)), metrics.NRMSE_CONVENTION))
    for label, roi in regions.items():
        rows.append(
            (f"{prefix}nrmse_{label}", _safe(lambda: metrics.nrmse(truth, estimate, roi)), metrics.NRMSE_CONVENTION)
        )
    for (a, roi_a), (b, roi_b) in itertools.permutations(regions.items(), 2):
        rows.append((f"{prefix}cnr_{a}_{b}", _safe(lambda: metrics.cnr(estimate, roi_a, roi_b)), "population std of second region"))
    return rows


def write_config_echo(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


# -------------------------------
# Commands
# -------------------------------

def simulate_experiment(cfg: ExperimentConfig, timer: Optional[StageTimer] = None) -> dict[str, Path]:
    """Write the truth, the measurement (operator output grid) and a config echo."""
    timer = timer or StageTimer()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    phantom = make_phantom(cfg.phantom, cfg.phantom_size) if cfg.truth_path is None else Phantom(load_raster(cfg.truth_path))
    with timer.stage("simulate"):
        op = build_operator(cfg, phantom.image.shape)
        measurement = simulate_measurement(cfg, op, phantom.image)
    with timer.stage("write"):
        outputs = {
            "truth": save_raster(out / "truth.fras", phantom.image),
            "truth_pgm": save_raster(out / "truth.pgm", phantom.image, peak=cfg.peak),
            "measurement": save_raster(out / "measurement.fras", measurement.data.reshape(op.output_shape)),
        }
        for label, roi in phantom.regions.items():
            outputs[f"roi_{label}"] = save_raster(out / f"roi_{label}.pgm", roi.mask.astype(np.float64))
        echo = {**cfg.echo(), "resolved_gauss_sigma": measurement.gauss_sigma}
        outputs["config"] = write_config_echo(out / "config.json", echo)
    logger.info("[simulate_experiment] done", extra={"outputs": {k: str(v) for k, v in outputs.items()}})
    return outputs


def execute_experiment(cfg: ExperimentConfig, timer: Optional[StageTimer] = None) -> ExperimentReport:
    """Full pipeline; every output goes to `cfg.output_dir`."""
    timer = timer or StageTimer()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    phantom = load_truth(cfg)
    if phantom is None:
        grid = load_raster(cfg.measurement_path)
        # Image shape unknown without a truth: measured data is assumed to
        # live on the image grid for deblurring and identity problems.
        if cfg.problem == "tomo":
            raise DimensionError("tomographic measurements need --truth-path to fix the image size", module="cli")
        image_shape = grid.shape
    else:
        image_shape = phantom.image.shape

    with timer.stage("simulate"):
        op = build_operator(cfg, image_shape)
        if cfg.measurement_path is not None:
            measurement = load_measurement(cfg, op)
        else:
            measurement = simulate_measurement(cfg, op, phantom.image)

    scale = measurement.scale
    truth = None if phantom is None else phantom.image.values * scale
    peak = cfg.peak * scale

    with timer.stage("solve"):
        reg = build_regularizer(cfg, image_shape)
        nll = PoissonNLL(measurement.solver_data, op)
        result = run_solver(cfg, nll, reg, measurement.background, truth, peak)
        denoised = final_denoise(result, reg, cfg.final_denoise_tau) if cfg.final_denoise else None

    rows: list[tuple[str, float, str]] = []
    with timer.stage("metrics"):
        if truth is not None:
            regions = phantom.regions
            rows += score(truth, result.reconstruction.values, peak, cfg.mae_scale / scale, regions)
            if denoised is not None:
                rows += score(truth, denoised.values, peak, cfg.mae_scale / scale, regions, prefix="denoised_")
        rows.append(("certified", 1.0 if result.certified else 0.0, "step-size conditions for monotone descent"))
        rows.append(("iterations", float(len(result.trace)), "completed iterations"))

    with timer.stage("write"):
        outputs = {
            "reconstruction": save_raster(out / "reconstruction.fras", result.reconstruction.values / scale),
            "reconstruction_pgm": save_raster(out / "reconstruction.pgm", result.reconstruction.values / scale, peak=cfg.peak),
            "trace": write_trace_csv(out / "trace.csv", result.trace),
            "metrics": write_metrics_csv(out / "metrics.csv", rows),
        }
        if result.raw_iterate is not None:
            outputs["raw_iterate"] = save_raster(out / "raw_iterate.fras", result.raw_iterate.values / scale)
        if denoised is not None:
            outputs["denoised"] = save_raster(out / "denoised.fras", denoised.values / scale)
            outputs["denoised_pgm"] = save_raster(out / "denoised.pgm", denoised.values / scale, peak=cfg.peak)
        echo = {
            **cfg.echo(),
            "resolved_gauss_sigma": measurement.gauss_sigma,
            "solver_config": result.config.model_dump(mode="json", by_alias=True),
            "certified": result.certified,
            "post_processing": result.metadata.get("post_processing", []),
        }
        outputs["config"] = write_config_echo(out / "config.json", echo)

    logger.info(
        f"[execute_experiment] {cfg.solver} finished, certified={result.certified}",
        extra={"timings_ms": timer.report()},
    )
    return ExperimentReport(result=result, metrics=rows, outputs=outputs, timings=timer.report())
