from typing import Annotated, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from .enums import BasisKind, BenchFunction, GeneratorKernel, KernelFamily, Method


class AffineMean(BaseModel):
    """Mean function x -> intercept + slopes . x; no slopes means a constant."""

    model_config = ConfigDict(frozen=True)

    intercept: float = 0.0
    slopes: Optional[List[float]] = None

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.full(points.shape[0], self.intercept)
        if self.slopes:
            out = out + points @ np.asarray(self.slopes, dtype=float)
        return out


class GaussianProcessGenerator(BaseModel):
    """Responses drawn from a Gaussian process with known generating parameters."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["gaussian_process"] = "gaussian_process"
    mean: AffineMean = Field(default_factory=AffineMean)
    sigma2: float = Field(1.0, ge=0)
    theta: List[float] = Field(..., min_length=1)
    kernel: GeneratorKernel = GeneratorKernel.MATERN
    nu: float = Field(2.5, gt=0, description="Smoothness of a Matérn generator.")
    family: KernelFamily = Field(
        KernelFamily.ANISOTROPIC_GEOMETRIC,
        description="Matérn family of the generator; ignored for squared-exponential draws.",
    )

    @field_validator("theta")
    @classmethod
    def _positive(cls, value: List[float]) -> List[float]:
        if any(t <= 0 for t in value):
            raise ValueError(f"generating correlation lengths must be positive, got {value}")
        return value


class DeterministicGenerator(BaseModel):
    """Responses given by a deterministic test function on (0, 1)^7."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["deterministic"] = "deterministic"
    function: BenchFunction
    linear_slope: float = Field(0.0, ge=0, description="Slope of the added linear trend (Rastrigin only).")

    @model_validator(mode="after")
    def _slope_only_for_rastrigin(self) -> "DeterministicGenerator":
        if self.linear_slope and self.function != BenchFunction.RASTRIGIN:
            raise ValueError("a linear trend is only added to the Rastrigin function")
        return self


Generator = Annotated[
    Union[GaussianProcessGenerator, DeterministicGenerator], Field(discriminator="kind")
]


class ExperimentConfig(BaseModel):
    """One coverage experiment: a generator, a Kriging model and the methods to compare."""

    model_config = ConfigDict(frozen=True)

    r: int = Field(3, ge=1)
    n: int = Field(30, ge=2)
    n_designs: int = Field(50, ge=1)
    n_tests: int = Field(200, ge=1)
    level: float = Field(0.95, gt=0, lt=1)
    generator: Generator
    basis: BasisKind = BasisKind.CONSTANT
    family: KernelFamily = KernelFamily.ANISOTROPIC_GEOMETRIC
    nu: float = Field(2.5, gt=0, description="Smoothness assumed by the Kriging model.")
    methods: List[Method] = Field(default_factory=lambda: list(Method))
    seed: int = Field(0, ge=0, lt=2**64)
    chain_iter: int = Field(3000, ge=2, description="Gibbs sweeps per design for the FPD.")
    chain_burn_in: int = Field(500, ge=0)
    fpd_components: Optional[int] = Field(
        1000, ge=1, description="Student components kept in the FPD mixture (evenly spaced)."
    )
    restarts: int = Field(10, ge=1, description="Optimizer restarts for MLE and MAP.")
    force: bool = Field(False, description="Run even when existence is not guaranteed.")

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        if not self.methods:
            raise ValueError("at least one method is required")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError(f"duplicate methods in {[m.value for m in self.methods]}")
        if self.basis == BasisKind.CUSTOM:
            raise ValueError("benchmarks support the none, constant and affine bases")
        if self.chain_burn_in >= self.chain_iter:
            raise ValueError("chain_burn_in must be smaller than chain_iter")
        gen = self.generator
        if isinstance(gen, GaussianProcessGenerator):
            if len(gen.theta) != self.r:
                raise ValueError(f"generator has {len(gen.theta)} correlation lengths for r={self.r}")
            if gen.mean.slopes is not None and len(gen.mean.slopes) != self.r:
                raise ValueError(f"mean has {len(gen.mean.slopes)} slopes for r={self.r}")
            if Method.TRUE in self.methods and gen.kernel != GeneratorKernel.MATERN:
                raise ValueError("the True method needs a Matérn generator")
        else:
            if Method.TRUE in self.methods:
                raise ValueError("the True method is only defined for Gaussian process generators")
            if self.r != 7:
                raise ValueError("deterministic test functions are defined for r=7")
        return self


class ReplicateRecord(BaseModel):
    index: int
    method: Method
    coverage: float = Field(..., ge=0, le=1)
    mean_length: float = Field(..., ge=0)


class ReplicateFailure(BaseModel):
    index: int
    method: Optional[Method] = Field(None, description="None when the whole replicate failed.")
    reason: str


class MethodSummary(BaseModel):
    method: Method
    coverage: float
    coverage_se: float
    mean_length: float
    length_se: float
    n_designs: int = Field(..., description="Replicates that produced intervals for this method.")
    n_failed: int = 0


class BenchResult(BaseModel):
    config: ExperimentConfig
    summaries: List[MethodSummary]
    records: List[ReplicateRecord] = Field(default_factory=list)
    failures: List[ReplicateFailure] = Field(default_factory=list)
    elapsed_seconds: float = 0.0

    @computed_field  # type: ignore[misc]
    @property
    def n_failures(self) -> int:
        return len(self.failures)

    def summary(self, method: Method) -> MethodSummary:
        for s in self.summaries:
            if s.method == method:
                return s
        raise KeyError(method)

    def by_method(self) -> Dict[Method, MethodSummary]:
        return {s.method: s for s in self.summaries}
