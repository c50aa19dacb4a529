from typing import List

from pydantic import BaseModel, ConfigDict, Field

from .design import LengthVector


class RestartTrace(BaseModel):
    init_theta: List[float]
    final_theta: List[float]
    init_objective: float
    objective: float
    evaluations: int
    success: bool


class OptimResult(BaseModel):
    """Best local optimum of a multi-start search over log correlation lengths."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    theta: LengthVector
    objective: float = Field(..., description="Maximised log objective at θ̂.")
    n_restarts: int = Field(..., ge=1)
    converged: bool = Field(..., description="False when the optimiser failed or θ̂ touches the search box.")
    trace: List[RestartTrace]
