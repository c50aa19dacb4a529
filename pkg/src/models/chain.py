from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from src.config.settings import settings

from .design import LengthVector


class ChainConfig(BaseModel):
    """Run parameters of the random-scan Gibbs sampler; one iteration is a sweep of r updates."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n_iter: int = Field(6000, ge=1, description="Total sweeps, burn-in included.")
    burn_in: int = Field(1000, ge=0)
    thin: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    init: Optional[LengthVector] = Field(
        None, description="Starting point; defaults to half the design range per coordinate."
    )
    grid_size: int = Field(default_factory=lambda: settings.grid_size, ge=16)
    truncation: Optional[Tuple[float, float]] = Field(
        None, description="Fixed (θ_min, θ_max) grid bounds; None for adaptive truncation."
    )

    @model_validator(mode="after")
    def _check(self) -> "ChainConfig":
        if self.burn_in >= self.n_iter:
            raise ValueError(f"burn_in ({self.burn_in}) must be smaller than n_iter ({self.n_iter})")
        if self.truncation is not None:
            lo, hi = self.truncation
            if not 0 < lo < hi:
                raise ValueError(f"truncation bounds must satisfy 0 < θ_min < θ_max, got {self.truncation}")
        return self

    @computed_field  # type: ignore[misc]
    @property
    def n_retained(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin


class ChainDiagnostics(BaseModel):
    ess: List[float] = Field(..., description="Effective sample size per coordinate.")
    split_rhat: List[float] = Field(..., description="Split-chain potential scale reduction per coordinate.")
    mcse: List[float] = Field(default_factory=list, description="Monte Carlo standard error of the posterior mean of each θ_i.")
    grid_cache_hits: int = 0
    grid_builds: int = 0
    singular_truncations: int = Field(0, description="Grids whose upper tail stopped at a factorisation failure.")


class ChainOutput(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    theta: np.ndarray = Field(..., description="Retained samples, shape (n_retained, r).")
    log_l1: np.ndarray = Field(..., description="log L1(y|θ) per retained sample.")
    update_counts: List[int]
    diagnostics: ChainDiagnostics
    config: ChainConfig

    def __len__(self) -> int:
        return int(self.theta.shape[0])


class ConditionalGrid(BaseModel):
    """
    Tabulated one-dimensional conditional posterior of log θ_i, normalised so
    that the CDF ends at exactly 1.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    i: int
    log_theta: np.ndarray
    log_density: np.ndarray
    cdf: np.ndarray
    singular_upper: bool = False
    singular_lower: bool = False

    @property
    def theta(self) -> np.ndarray:
        return np.exp(self.log_theta)

    @property
    def bounds(self) -> Tuple[float, float]:
        return float(np.exp(self.log_theta[0])), float(np.exp(self.log_theta[-1]))

    def quantile(self, prob):
        """Inverse CDF in θ, linear in log θ between grid nodes."""
        return np.exp(np.interp(prob, self.cdf, self.log_theta))

    def density(self) -> np.ndarray:
        """Normalised density of log θ_i at the grid nodes."""
        finite = np.isfinite(self.log_density)
        weights = np.where(finite, np.exp(self.log_density - self.log_density[finite].max()), 0.0)
        return weights / np.trapezoid(weights, self.log_theta)

    def mean(self) -> float:
        return float(np.trapezoid(self.density() * self.theta, self.log_theta))
