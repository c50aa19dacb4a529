from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .enums import BasisKind

BasisFunction = Callable[[np.ndarray], float]


class TrendBasis(BaseModel):
    """The p trend basis functions of the Universal Kriging mean."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: BasisKind = BasisKind.CONSTANT
    functions: Optional[List[BasisFunction]] = None

    @model_validator(mode="after")
    def _custom_needs_functions(self) -> "TrendBasis":
        if self.kind == BasisKind.CUSTOM and not self.functions:
            raise ValueError("a custom basis needs at least one function")
        if self.kind != BasisKind.CUSTOM and self.functions:
            raise ValueError(f"{self.kind.value} basis does not take functions")
        return self

    @property
    def is_degree_at_most_one(self) -> bool:
        return self.kind in (BasisKind.NONE, BasisKind.CONSTANT, BasisKind.AFFINE)


class ModelMatrices(BaseModel):
    """H with the orthonormal split of observation space: span(P) = span(H), W'H = 0."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    H: np.ndarray
    P: np.ndarray
    W: np.ndarray

    @property
    def n(self) -> int:
        return int(self.H.shape[0])

    @property
    def p(self) -> int:
        return int(self.H.shape[1])

    @property
    def m(self) -> int:
        """Residual dimension n - p."""
        return self.n - self.p

    @property
    def trend_coordinates(self) -> np.ndarray:
        """P'H, invertible p x p; maps β to the P-coordinates of Hβ."""
        return self.P.T @ self.H
