from typing import Optional

import numpy as np
from loguru import logger

from src.errors import DuplicatePointError, KernelDomainError
from src.models.design import DesignSet, LengthVector
from src.models.enums import KernelFamily
from src.models.kernel import KernelSpec

from .matern import matern_deriv_values, matern_values


def _lags(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coordinatewise lags a_k - b_l, shape (n_a, n_b, r)."""
    return a[:, None, :] - b[None, :, :]


def _as_theta_stack(thetas: np.ndarray, r: int) -> np.ndarray:
    stack = np.atleast_2d(np.asarray(thetas, dtype=float))
    if stack.shape[1] != r:
        raise KernelDomainError(f"θ has {stack.shape[1]} coordinates, design has {r}")
    if not np.all(np.isfinite(stack)) or np.any(stack <= 0):
        raise KernelDomainError("correlation lengths must be positive and finite")
    return stack


def _check_design(design: DesignSet, spec: KernelSpec) -> None:
    if design.r != spec.dim:
        raise KernelDomainError(
            f"design has dimension {design.r}, kernel expects {spec.dim}"
        )
    if design.has_duplicates():
        raise DuplicatePointError("design contains duplicated points")
    if spec.family == KernelFamily.TENSORIZED and not design.is_coordinate_distinct():
        logger.warning(
            "Tensorized kernel on a design with shared coordinate values; "
            "low-correlation prior results assume coordinate-distinct points"
        )


def _check_index(i: int, r: int) -> None:
    if not 0 <= i < r:
        raise KernelDomainError(f"coordinate index {i} out of range for r={r}")


def _correlation(lags: np.ndarray, thetas: np.ndarray, spec: KernelSpec) -> np.ndarray:
    # lags (n_a, n_b, r), thetas (G, r) -> (G, n_a, n_b)
    scaled = lags[None, ...] / thetas[:, None, None, :]
    if spec.family == KernelFamily.ANISOTROPIC_GEOMETRIC:
        rho = np.sqrt(np.sum(scaled**2, axis=-1))
        return matern_values(rho, spec.nu)
    return np.prod(matern_values(np.abs(scaled), spec.nu), axis=-1)


def _correlation_deriv(
    lags: np.ndarray, thetas: np.ndarray, i: int, spec: KernelSpec
) -> np.ndarray:
    theta_i = thetas[:, i][:, None, None]
    scaled = lags[None, ...] / thetas[:, None, None, :]
    d_i = lags[None, :, :, i]
    if spec.family == KernelFamily.ANISOTROPIC_GEOMETRIC:
        rho = np.sqrt(np.sum(scaled**2, axis=-1))
        safe = np.where(rho > 0, rho, 1.0)
        drho = np.where(rho > 0, -(d_i**2) / (theta_i**3 * safe), 0.0)
        return matern_deriv_values(rho, spec.nu) * drho
    factors = matern_values(np.abs(scaled), spec.nu)
    others = np.prod(np.delete(factors, i, axis=-1), axis=-1)
    abs_i = np.abs(d_i)
    return others * matern_deriv_values(abs_i / theta_i, spec.nu) * (-abs_i / theta_i**2)


def corr_matrix(design: DesignSet, lengths: LengthVector, spec: KernelSpec) -> np.ndarray:
    """Σ_θ: unit diagonal, symmetric, positive definite for distinct points."""
    _check_design(design, spec)
    thetas = _as_theta_stack(lengths.theta, design.r)
    sigma = _correlation(_lags(design.points, design.points), thetas, spec)[0]
    np.fill_diagonal(sigma, 1.0)
    return sigma


def corr_matrix_batch(design: DesignSet, thetas: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Stack of correlation matrices, one per row of `thetas`, shape (G, n, n)."""
    _check_design(design, spec)
    stack = _as_theta_stack(thetas, design.r)
    sigma = _correlation(_lags(design.points, design.points), stack, spec)
    idx = np.arange(design.n)
    sigma[:, idx, idx] = 1.0
    return sigma


def corr_matrix_deriv(
    design: DesignSet, lengths: LengthVector, i: int, spec: KernelSpec
) -> np.ndarray:
    """Entrywise ∂Σ_θ/∂θ_i (zero-based i), zero diagonal."""
    _check_index(i, design.r)
    _check_design(design, spec)
    thetas = _as_theta_stack(lengths.theta, design.r)
    deriv = _correlation_deriv(_lags(design.points, design.points), thetas, i, spec)[0]
    np.fill_diagonal(deriv, 0.0)
    return deriv


def corr_matrix_deriv_batch(
    design: DesignSet, thetas: np.ndarray, i: int, spec: KernelSpec
) -> np.ndarray:
    _check_index(i, design.r)
    _check_design(design, spec)
    stack = _as_theta_stack(thetas, design.r)
    deriv = _correlation_deriv(_lags(design.points, design.points), stack, i, spec)
    idx = np.arange(design.n)
    deriv[:, idx, idx] = 0.0
    return deriv


def corr_matrix_deriv_mu(
    design: DesignSet, lengths: LengthVector, i: int, spec: KernelSpec
) -> np.ndarray:
    """∂Σ/∂μ_i evaluated directly in the inverse-length parametrisation."""
    _check_index(i, design.r)
    _check_design(design, spec)
    mu = lengths.mu
    lags = _lags(design.points, design.points)
    d_i = lags[:, :, i]
    if spec.family == KernelFamily.ANISOTROPIC_GEOMETRIC:
        rho = np.sqrt(np.sum((lags * mu) ** 2, axis=-1))
        safe = np.where(rho > 0, rho, 1.0)
        drho = np.where(rho > 0, mu[i] * d_i**2 / safe, 0.0)
        deriv = matern_deriv_values(rho, spec.nu) * drho
    else:
        factors = matern_values(np.abs(lags * mu), spec.nu)
        others = np.prod(np.delete(factors, i, axis=-1), axis=-1)
        deriv = others * matern_deriv_values(mu[i] * np.abs(d_i), spec.nu) * np.abs(d_i)
    np.fill_diagonal(deriv, 0.0)
    return deriv


def cross_corr_matrix(
    design: DesignSet, targets: DesignSet, lengths: LengthVector, spec: KernelSpec
) -> np.ndarray:
    """Correlations between n0 targets (rows) and n design points (columns)."""
    if targets.r != design.r:
        raise KernelDomainError(
            f"targets have dimension {targets.r}, design has {design.r}"
        )
    thetas = _as_theta_stack(lengths.theta, design.r)
    return _correlation(_lags(targets.points, design.points), thetas, spec)[0]


def squared_exponential_corr_matrix(points: np.ndarray, lengths: LengthVector) -> np.ndarray:
    """
    exp(-sum_j (d_j / θ_j)^2), used to generate data only, never for inference.

    With the 2*sqrt(nu) scaling, sqrt(2 nu) d = 2 sqrt(nu) t, i.e. d = sqrt(2) t.
    The usual Matérn tends to exp(-d^2 / 2) as nu grows, hence exp(-t^2) here:
    the scaling constant is 1.
    """
    scaled = _lags(points, points) / lengths.theta
    return np.exp(-np.sum(scaled**2, axis=-1))


def limit_derivative_pattern(
    design: DesignSet, alpha: np.ndarray, i: int, spec: KernelSpec, rtol: Optional[float] = None
) -> np.ndarray:
    """
    Limit of ∂Σ/∂μ_i divided by its max-norm as μ = s·α with s → ∞.

    Only pairs at minimal distance in the α-scaled design survive: Euclidean
    distance for the geometric family, 1-distance for the tensorized one. The
    surviving entries are nonpositive and the matrix has max-norm 1.
    """
    _check_index(i, design.r)
    alpha = np.asarray(alpha, dtype=float)
    rtol = 1e-12 if rtol is None else rtol
    lags = _lags(design.points, design.points)
    scaled = np.abs(lags * alpha)
    if spec.family == KernelFamily.ANISOTROPIC_GEOMETRIC:
        dist = np.sqrt(np.sum(scaled**2, axis=-1))
    else:
        dist = np.sum(scaled, axis=-1)
    off = ~np.eye(design.n, dtype=bool)
    d_min = dist[off].min()
    minimal = off & (dist <= d_min * (1.0 + rtol))
    if spec.family == KernelFamily.ANISOTROPIC_GEOMETRIC:
        weights = lags[:, :, i] ** 2
    else:
        power = spec.nu - 0.5
        weights = np.abs(lags[:, :, i]) * np.prod(scaled**power, axis=-1)
    pattern = np.where(minimal, -weights, 0.0)
    scale = np.max(np.abs(pattern))
    return pattern / scale if scale > 0 else pattern
