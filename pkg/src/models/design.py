from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, computed_field, field_validator


def _frozen_array(value: Any, ndim: int) -> np.ndarray:
    arr = np.array(value, dtype=float, copy=True)
    if ndim == 2 and arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("array contains non-finite values")
    arr.flags.writeable = False
    return arr


class DesignSet(BaseModel):
    """n points of the input domain, stored row-major as an (n, r) array."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    points: np.ndarray

    @field_validator("points", mode="before")
    @classmethod
    def _as_points(cls, value: Any) -> np.ndarray:
        arr = _frozen_array(value, ndim=2)
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("a design needs at least one point in at least one dimension")
        return arr

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def r(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return self.n

    def has_duplicates(self) -> bool:
        return bool(np.unique(self.points, axis=0).shape[0] < self.n)

    def is_coordinate_distinct(self) -> bool:
        """True when no two points share a value in any coordinate."""
        return all(
            np.unique(self.points[:, j]).size == self.n for j in range(self.r)
        )

    def half_ranges(self) -> np.ndarray:
        """Coordinatewise (max - min) / 2, the default chain initialisation."""
        span = self.points.max(axis=0) - self.points.min(axis=0)
        return np.where(span > 0, span / 2.0, 0.5)

    def concat(self, other: "DesignSet") -> "DesignSet":
        """Rows of self followed by the rows of other."""
        if other.r != self.r:
            raise ValueError(f"cannot stack {other.r}-d points under {self.r}-d points")
        return DesignSet(points=np.vstack([self.points, other.points]))


class LengthVector(BaseModel):
    """Correlation lengths θ (all > 0) with the inverse lengths μ = 1/θ as accessor."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    theta: np.ndarray

    @field_validator("theta", mode="before")
    @classmethod
    def _positive(cls, value: Any) -> np.ndarray:
        arr = np.atleast_1d(np.array(value, dtype=float, copy=True))
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("θ must be a non-empty vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("θ must be finite")
        if np.any(arr <= 0):
            raise ValueError(f"correlation lengths must be positive, got {arr.tolist()}")
        arr.flags.writeable = False
        return arr

    @classmethod
    def from_mu(cls, mu: Any) -> "LengthVector":
        return cls(theta=1.0 / np.atleast_1d(np.asarray(mu, dtype=float)))

    @computed_field  # type: ignore[misc]
    @property
    def mu(self) -> np.ndarray:
        return 1.0 / self.theta

    @property
    def r(self) -> int:
        return int(self.theta.size)

    def with_coordinate(self, i: int, value: float) -> "LengthVector":
        theta = self.theta.copy()
        theta[i] = value
        return LengthVector(theta=theta)

    def key(self) -> tuple[float, ...]:
        return tuple(float(t) for t in self.theta)
