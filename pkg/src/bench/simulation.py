from typing import Optional

import numpy as np
from loguru import logger

from src.config.settings import settings
from src.errors import FactorizationError, KernelDomainError
from src.kernels.correlation import corr_matrix, squared_exponential_corr_matrix
from src.models.design import DesignSet, LengthVector
from src.models.enums import GeneratorKernel, KernelFamily
from src.models.experiment import GaussianProcessGenerator
from src.models.kernel import KernelSpec


def generation_covariance(
    points: np.ndarray,
    lengths: LengthVector,
    kernel: GeneratorKernel = GeneratorKernel.MATERN,
    nu: Optional[float] = 2.5,
    family: KernelFamily = KernelFamily.ANISOTROPIC_GEOMETRIC,
) -> np.ndarray:
    """Correlation matrix of the generating process at the given points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if kernel == GeneratorKernel.SQUARED_EXPONENTIAL:
        return squared_exponential_corr_matrix(points, lengths)
    if nu is None:
        raise KernelDomainError("a Matérn generator needs a smoothness")
    spec = KernelSpec(family=family, nu=nu, dim=points.shape[1])
    return corr_matrix(DesignSet(points=points), lengths, spec)


def _generation_factor(corr: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        pass
    jitter = settings.generation_jitter
    if jitter <= 0:
        raise FactorizationError("generating correlation matrix is not positive definite")
    logger.debug(f"Generating correlation matrix needs jitter {jitter:.1e}")
    try:
        return np.linalg.cholesky(corr + jitter * np.eye(corr.shape[0]))
    except np.linalg.LinAlgError as e:
        raise FactorizationError(
            f"generating correlation matrix not positive definite even with jitter {jitter:.1e}"
        ) from e


def sample_gp(
    points: np.ndarray,
    mean_values: np.ndarray,
    sigma2: float,
    lengths: LengthVector,
    rng: np.random.Generator | int,
    kernel: GeneratorKernel = GeneratorKernel.MATERN,
    nu: Optional[float] = 2.5,
    family: KernelFamily = KernelFamily.ANISOTROPIC_GEOMETRIC,
) -> np.ndarray:
    """
    One joint draw of N(mean, σ² Σ) at all points.

    Pass design and test points together so that every interval is scored
    against the same realisation that produced the observations.

    Raises:
        FactorizationError: if Σ cannot be factorized even with the generation jitter.
    """
    mean_values = np.asarray(mean_values, dtype=float).reshape(-1)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if mean_values.size != points.shape[0]:
        raise KernelDomainError(
            f"{mean_values.size} mean values for {points.shape[0]} points"
        )
    if not sigma2 >= 0:
        raise KernelDomainError(f"σ² must be nonnegative, got {sigma2}")
    if sigma2 == 0:
        return mean_values.copy()
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    lower = _generation_factor(generation_covariance(points, lengths, kernel, nu, family))
    return mean_values + np.sqrt(sigma2) * (lower @ rng.standard_normal(points.shape[0]))


def generator_kernel_spec(gen: GaussianProcessGenerator, r: int) -> KernelSpec:
    """The Matérn kernel that generated the data, for scoring with the true parameters."""
    if gen.kernel != GeneratorKernel.MATERN:
        raise KernelDomainError("only Matérn generators have a Kriging counterpart")
    return KernelSpec(family=gen.family, nu=gen.nu, dim=r)
