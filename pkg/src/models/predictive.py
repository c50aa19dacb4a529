from functools import cached_property
from typing import Annotated, List, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator


class _Gaussian(BaseModel):
    """`cov` is the n0 x n0 covariance, or only its diagonal for marginal-only predictions."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mean: np.ndarray
    cov: np.ndarray

    @property
    def n_targets(self) -> int:
        return int(self.mean.shape[0])

    def marginal_variance(self) -> np.ndarray:
        var = np.diag(self.cov) if self.cov.ndim == 2 else self.cov
        return np.clip(var, 0.0, None)

    def marginal_sd(self) -> np.ndarray:
        return np.sqrt(self.marginal_variance())


class KnownAll(_Gaussian):
    """Gaussian predictive with β, σ² and θ all known."""

    kind: Literal["known_all"] = "known_all"


class BetaMarginalized(_Gaussian):
    """Gaussian predictive with β integrated out, σ² and θ known."""

    kind: Literal["beta_marginalized"] = "beta_marginalized"


class Student(BaseModel):
    """Multivariate Student predictive with β and σ² integrated out, θ known."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["student"] = "student"
    location: np.ndarray
    scale: np.ndarray
    dof: int = Field(..., ge=1)

    @property
    def n_targets(self) -> int:
        return int(self.location.shape[0])

    def marginal_scale(self) -> np.ndarray:
        """Square roots of the diagonal of the scale matrix."""
        diag = np.diag(self.scale) if self.scale.ndim == 2 else self.scale
        return np.sqrt(np.clip(diag, 0.0, None))


class Mixture(BaseModel):
    """Equal-weight mixture of Student components, one per posterior sample of θ."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["mixture"] = "mixture"
    components: List[Student]

    @field_validator("components")
    @classmethod
    def _non_empty(cls, value: List[Student]) -> List[Student]:
        if not value:
            raise ValueError("a mixture needs at least one component")
        return value

    @computed_field  # type: ignore[misc]
    @property
    def weights(self) -> List[float]:
        k = len(self.components)
        return [1.0 / k] * k

    @property
    def n_targets(self) -> int:
        return self.components[0].n_targets

    @cached_property
    def component_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Locations and marginal scales, shape (K, n0), and dof, shape (K,)."""
        loc = np.stack([c.location for c in self.components])
        scale = np.stack([c.marginal_scale() for c in self.components])
        dof = np.array([c.dof for c in self.components])
        return loc, scale, dof

    @property
    def mean(self) -> np.ndarray:
        return np.mean([c.location for c in self.components], axis=0)


PredictiveDistribution = Annotated[
    Union[KnownAll, BetaMarginalized, Student, Mixture], Field(discriminator="kind")
]
