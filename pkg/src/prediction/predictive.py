"""
Predictive distributions at unobserved targets for each state of knowledge.

With H0. = H00 (P'H)^-1 and the orthonormal split of observation space,

    E0  = H0. P'y
    S00 = Σ00 + H0. P'ΣP H0.' - H0. P'Σ.0 - Σ0. P H0.'
    S0W = (H0. P'Σ - Σ0.) W

the predictive mean once β is integrated out is E0 - S0W (W'ΣW)^-1 W'y and its
covariance σ² (S00 - S0W (W'ΣW)^-1 S0W').
"""

from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from src.errors import KernelDomainError, KrigingError
from src.kernels.correlation import cross_corr_matrix
from src.linear_model.context import KrigingContext, ThetaLike
from src.linear_model.marginal import checked_quadratic_form
from src.linear_model.state import CorrelationState
from src.models.chain import ChainOutput
from src.models.design import DesignSet, LengthVector
from src.models.predictive import BetaMarginalized, KnownAll, Mixture, Student
from src.utils.linalg import cho_solve, symmetrize


def _lengths(theta: ThetaLike) -> LengthVector:
    return theta if isinstance(theta, LengthVector) else LengthVector(theta=theta)


def _target_correlations(
    targets: DesignSet, lengths: LengthVector, context: KrigingContext, marginal: bool
) -> Tuple[np.ndarray, np.ndarray]:
    """Σ0. (n0 x n) and Σ00 (n0 x n0, or its unit diagonal when marginal)."""
    cross = cross_corr_matrix(context.design, targets, lengths, context.kernel)
    if marginal:
        return cross, np.ones(targets.n)
    return cross, cross_corr_matrix(targets, targets, lengths, context.kernel)


def _quad_diag(left: np.ndarray, middle: np.ndarray, right: np.ndarray) -> np.ndarray:
    return np.einsum("ij,jk,ik->i", left, middle, right)


def predict_known_mean(
    targets: DesignSet,
    y: np.ndarray,
    mean_design: np.ndarray,
    mean_targets: np.ndarray,
    sigma2: float,
    theta: ThetaLike,
    context: KrigingContext,
    marginal: bool = False,
) -> KnownAll:
    """Simple Kriging: conditional Gaussian of y0 given y with the mean function known."""
    if not sigma2 >= 0:
        raise KernelDomainError(f"σ² must be nonnegative, got {sigma2}")
    lengths = _lengths(theta)
    state = context.state(lengths)
    cross, sigma00 = _target_correlations(targets, lengths, context, marginal)
    resid = np.asarray(y, dtype=float) - np.asarray(mean_design, dtype=float)
    mean = np.asarray(mean_targets, dtype=float) + cross @ cho_solve(state.sigma_factor, resid)
    solved = cho_solve(state.sigma_factor, cross.T)
    if marginal:
        cov = sigma2 * (sigma00 - np.sum(cross * solved.T, axis=1))
    else:
        cov = sigma2 * symmetrize(sigma00 - cross @ solved)
    return KnownAll(mean=mean, cov=cov)


def predict_known_all(
    targets: DesignSet,
    y: np.ndarray,
    beta: Sequence[float],
    sigma2: float,
    theta: ThetaLike,
    context: KrigingContext,
    marginal: bool = False,
) -> KnownAll:
    """Conditional Gaussian of y0 given y with β, σ² and θ all known."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.size != context.p:
        raise KernelDomainError(f"β has {beta.size} entries, the basis has p={context.p}")
    H0 = context.basis_at(targets)
    return predict_known_mean(
        targets, y, context.H @ beta, H0 @ beta, sigma2, theta, context, marginal
    )


def _beta_free_moments(
    targets: DesignSet, y: np.ndarray, state: CorrelationState, context: KrigingContext, marginal: bool
) -> Tuple[np.ndarray, np.ndarray]:
    """Location and σ²-free covariance of y0 once β is integrated out."""
    lengths = state.lengths
    assert lengths is not None
    mm = context.matrices
    P, W, S = mm.P, mm.W, state.sigma
    y = np.asarray(y, dtype=float)
    cross, sigma00 = _target_correlations(targets, lengths, context, marginal)

    if mm.p > 0:
        H0 = context.basis_at(targets)
        h0 = np.linalg.solve(mm.trend_coordinates.T, H0.T).T  # H00 (P'H)^-1
        e0 = h0 @ (P.T @ y)
        ps = P.T @ S
        s0w = (h0 @ ps - cross) @ W
        psp = ps @ P
        cross_p = cross @ P
        if marginal:
            s00 = sigma00 + _quad_diag(h0, psp, h0) - 2.0 * np.sum(h0 * cross_p, axis=1)
        else:
            s00 = sigma00 + h0 @ psp @ h0.T - h0 @ cross_p.T - cross_p @ h0.T
    else:
        e0 = np.zeros(targets.n)
        s0w = -cross @ W
        s00 = sigma00

    location = e0 - s0w @ state.projected_solve(W.T @ y)
    solved = state.projected_solve(s0w.T)
    if marginal:
        cov = s00 - np.sum(s0w * solved.T, axis=1)
    else:
        cov = symmetrize(s00 - s0w @ solved)
    return location, cov


def predict_beta_marginal(
    targets: DesignSet,
    y: np.ndarray,
    sigma2: float,
    theta: ThetaLike,
    context: KrigingContext,
    marginal: bool = False,
) -> BetaMarginalized:
    """Gaussian predictive with β integrated out under a flat prior; σ² and θ known."""
    if not sigma2 >= 0:
        raise KernelDomainError(f"σ² must be nonnegative, got {sigma2}")
    state = context.state(_lengths(theta))
    location, cov = _beta_free_moments(targets, y, state, context, marginal)
    return BetaMarginalized(mean=location, cov=sigma2 * cov)


def predict_student(
    targets: DesignSet,
    y: np.ndarray,
    theta: ThetaLike,
    context: KrigingContext,
    marginal: bool = False,
) -> Student:
    """Student predictive with n - p degrees of freedom: β and σ² integrated out, θ known."""
    state = context.state(_lengths(theta))
    q = checked_quadratic_form(y, state)
    m = context.matrices.m
    location, cov = _beta_free_moments(targets, y, state, context, marginal)
    return Student(location=location, scale=(q / m) * cov, dof=m)


def predict_full_bayes(
    targets: DesignSet,
    y: np.ndarray,
    chain: ChainOutput,
    context: KrigingContext,
    marginal: bool = False,
    max_components: Optional[int] = None,
) -> Mixture:
    """
    Equal-weight Student mixture over the retained θ samples of a Gibbs chain.

    Args:
        max_components: Use an evenly spaced subset of at most this many samples.
    """
    if len(chain) == 0:
        raise KrigingError("cannot build a full-Bayes predictive from an empty chain")
    rows = chain.theta
    if max_components is not None and rows.shape[0] > max_components:
        pick = np.linspace(0, rows.shape[0] - 1, max_components).round().astype(int)
        rows = rows[pick]
    components = [predict_student(targets, y, row, context, marginal) for row in rows]
    logger.debug(f"Full-Bayes predictive with {len(components)} Student components")
    return Mixture(components=components)
