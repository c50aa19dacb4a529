import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

from .enums import Parametrization


class SigmaPosterior(BaseModel):
    """Inverse-Gamma posterior of σ² given θ."""

    model_config = ConfigDict(frozen=True)

    shape: float = Field(..., gt=0)
    rate: float = Field(..., gt=0)

    @computed_field  # type: ignore[misc]
    @property
    def mean(self) -> float:
        return self.rate / (self.shape - 1.0) if self.shape > 1 else float("inf")


class BetaPosterior(BaseModel):
    """Gaussian posterior of the trend coefficients given σ² and θ."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mean: np.ndarray
    covariance: np.ndarray


class ConditionalPriorEval(BaseModel):
    i: int = Field(..., ge=0, description="Zero-based coordinate index.")
    value: float = Field(..., ge=0, description="Unnormalised conditional prior density.")
    trace_term: float
    trace_sq_term: float
    parametrization: Parametrization = Parametrization.THETA
    clamped: bool = Field(False, description="Whether a slightly negative radicand was set to 0.")
