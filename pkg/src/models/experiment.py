from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import get_config
from src.models.geometry import ProjectorGeometry
from src.models.noise import NoiseSpec
from src.models.solver_config import SolverConfig

EM_SOLVERS = ("mlem", "osem")
SOLVER_FIELDS = (
    "tau",
    "lam",
    "sigma_denoiser",
    "iterations",
    "subsets",
    "lipschitz_bound",
    "seed",
    "data_tau",
    "anchor",
    "early_stop",
)


class ExperimentConfig(BaseModel):
    """One simulate → solve → score pipeline.

    Field names double as CLI flags (`--kernel-size`, `--lambda`, …) and as
    keys of the KEY=VALUE experiment files.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    # --- forward model ---
    problem: Literal["deblur", "tomo", "identity"] = Field("deblur", description="forward operator family")
    kernel_path: Optional[Path] = Field(None, description="blur kernel file (overrides kernel size/std)")
    kernel_size: int = Field(9, gt=0, description="Gaussian blur kernel side (odd)")
    kernel_std: float = Field(1.6, gt=0, description="Gaussian blur kernel std in pixels")
    num_angles: int = Field(12, gt=0, description="projection angles over [0, pi)")
    num_detector_bins: Optional[int] = Field(None, gt=1, description="detector bins (default: cover the diagonal)")
    detector_spacing: float = Field(1.0, gt=0, description="detector bin width in pixels")
    normalize_operator: bool = Field(False, description="divide A by its largest sensitivity")

    # --- noise ---
    zeta: float = Field(5.0, gt=0, description="Poisson gain")
    gauss_sigma: float = Field(0.0, ge=0, description="additive Gaussian noise std")
    gauss_sigma_relative: Optional[float] = Field(None, ge=0, description="Gaussian std as a fraction of the mean signal")
    noiseless: bool = Field(False, description="use the exact mean as the measurement")

    # --- solver ---
    solver: Literal["mlem", "osem", "mfb", "pnp_mm"] = Field("pnp_mm", description="reconstruction algorithm")
    tau: float = Field(1.0, gt=0, description="step size")
    lam: float = Field(0.0, ge=0, alias="lambda", description="regularization weight")
    sigma_denoiser: float = Field(0.0, ge=0, description="denoiser strength (linear smoother width)")
    iterations: int = Field(100, gt=0, description="iterations (OSEM: full cycles)")
    subsets: int = Field(1, gt=0, description="OSEM subsets")
    lipschitz_bound: Optional[float] = Field(None, gt=0, description="override the regularizer's gradient Lipschitz bound")
    seed: int = Field(default_factory=lambda: get_config().SEED, description="noise seed")
    data_tau: Optional[float] = Field(None, gt=0, description="separate data-term step (uncertified)")
    anchor: Literal["iterate", "half_step"] = Field("iterate", description="PnP-MM majorant anchor")
    early_stop: bool = Field(False, description="stop when the iterate stalls")

    # --- regularizer ---
    regularizer: Optional[Literal["none", "linear_smoother", "smoothed_tv"]] = Field(
        None, description="explicit regularizer (default: none for EM, smoothed_tv otherwise)"
    )
    tv_epsilon: float = Field(0.05, gt=0, description="smoothed-TV epsilon")
    final_denoise: bool = Field(False, description="apply one gradient-step denoising to the output")
    final_denoise_tau: float = Field(1.0, ge=0, description="step of the final denoising")

    # --- inputs and outputs ---
    truth_path: Optional[Path] = Field(None, description="ground-truth raster (PGM or FRAS)")
    phantom: Literal["piecewise", "disc", "brain"] = Field("piecewise", description="synthetic truth when no file is given")
    phantom_size: int = Field(64, ge=16, description="synthetic truth side in pixels")
    measurement_path: Optional[Path] = Field(None, description="measured data (FRAS) instead of simulation")
    output_dir: Path = Field(default_factory=lambda: Path(get_config().OUTPUT_DIR), description="run directory")
    peak: float = Field(default_factory=lambda: get_config().PEAK, gt=0, description="PSNR peak and PGM white level")
    mae_scale: float = Field(1.0, gt=0, description="MAE multiplier (3000 maps [0, 1] to a HU window)")

    # --- field validation ---
    @field_validator("kernel_size")
    def validate_kernel_size(cls, v):
        if v % 2 == 0:
            raise ValueError("kernel_size must be odd.")
        return v

    @field_validator("kernel_path", "truth_path", "measurement_path")
    def validate_exists(cls, v):
        if v is not None and not v.is_file():
            raise ValueError(f"file not found: {v}")
        return v

    @model_validator(mode="after")
    def validate_combination(self):
        regularizer = self.resolved_regularizer
        if self.solver in EM_SOLVERS and regularizer != "none":
            raise ValueError(f"{self.solver} takes no regularizer, got '{regularizer}'.")
        if self.subsets > 1 and self.solver != "osem":
            raise ValueError("subsets > 1 is only meaningful for osem.")
        if self.subsets > 1 and self.problem == "identity":
            raise ValueError("the identity operator cannot be split into subsets.")
        if self.subsets > self.kernel_size and self.problem == "deblur" and self.kernel_path is None:
            # Interleaved row subsets see every pixel only while the kernel spans each residue.
            raise ValueError(f"subsets ({self.subsets}) must not exceed kernel_size ({self.kernel_size}).")
        if self.gauss_sigma > 0 and self.gauss_sigma_relative is not None:
            raise ValueError("give gauss_sigma or gauss_sigma_relative, not both.")
        if self.noiseless and (self.gauss_sigma > 0 or self.gauss_sigma_relative):
            raise ValueError("noiseless runs take no Gaussian noise.")
        if self.measurement_path is not None and self.gauss_sigma_relative is not None:
            # The relative level needs the noiseless signal, unknown for measured data.
            raise ValueError("measured data needs an absolute gauss_sigma.")
        if regularizer == "linear_smoother" and self.sigma_denoiser <= 0:
            raise ValueError("linear_smoother needs sigma_denoiser > 0.")
        return self

    @property
    def resolved_regularizer(self) -> str:
        if self.regularizer is not None:
            return self.regularizer
        return "none" if self.solver in EM_SOLVERS else "smoothed_tv"

    # --- derived models ---
    def solver_config(self, background: float = 0.0) -> SolverConfig:
        return SolverConfig(background=background, **{name: getattr(self, name) for name in SOLVER_FIELDS})

    def noise_spec(self, gauss_sigma: float) -> NoiseSpec:
        return NoiseSpec(zeta=self.zeta, gauss_sigma=gauss_sigma, seed=self.seed)

    def geometry(self, image_shape: tuple[int, int]) -> ProjectorGeometry:
        if self.num_detector_bins is None:
            return ProjectorGeometry.for_image(image_shape, self.num_angles, self.detector_spacing)
        return ProjectorGeometry(
            num_angles=self.num_angles,
            num_detector_bins=self.num_detector_bins,
            detector_spacing=self.detector_spacing,
        )

    def echo(self) -> dict:
        """JSON-ready dump with the regularizer default resolved."""
        data = self.model_dump(mode="json", by_alias=True)
        data["regularizer"] = self.resolved_regularizer
        return data
