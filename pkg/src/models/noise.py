from pydantic import BaseModel, ConfigDict, Field


class NoiseSpec(BaseModel):
    """Gain ζ of the Poisson counts, electronic noise σ and the RNG seed."""

    model_config = ConfigDict(frozen=True)

    zeta: float = Field(..., gt=0, description="gain controlling the Poisson noise strength")
    gauss_sigma: float = Field(0.0, ge=0, description="std of the additive Gaussian noise")
    seed: int = 0
