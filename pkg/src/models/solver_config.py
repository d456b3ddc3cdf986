from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class SolverConfig(BaseModel):
    """Step sizes, regularization weight and loop controls for every solver.

    `lam` is exposed as `lambda` when (de)serialised. `lipschitz_bound` left
    unset is filled in from the regularizer by the solvers.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    tau: float = Field(1.0, gt=0)
    lam: float = Field(0.0, ge=0, alias="lambda")
    sigma_denoiser: float = Field(0.0, ge=0)
    iterations: int = Field(100, gt=0)
    subsets: int = Field(1, gt=0)
    background: float = Field(0.0, ge=0)
    lipschitz_bound: Optional[float] = Field(None, gt=0)
    seed: int = 0

    # Split step on the data term (τ on the denoiser, data_tau on the prox).
    data_tau: Optional[float] = Field(None, gt=0)
    # Where the EM majorant is anchored inside pnp_mm_run.
    anchor: Literal["iterate", "half_step"] = "iterate"
    early_stop: bool = False

    def step_product(self, lipschitz: float) -> float:
        return self.tau * self.lam * lipschitz

    def is_certifiable(self, lipschitz: float) -> bool:
        """Step-size conditions for certified descent: τλL < 1, single τ."""
        return self.data_tau is None and self.step_product(lipschitz) < 1.0
