"""
Quantities of the Universal Kriging model with the trend β and the variance σ²
integrated out analytically.

All likelihoods are densities in y returned in log space. The normalising
constants are exact integrals of the Gaussian likelihood, flat prior on β and
1/σ² on σ², so log L1 is a genuine density in y even though the priors on the
marginalised parameters are improper.
"""

import numpy as np
from loguru import logger
from scipy import special

from src.config.settings import settings
from src.errors import DegenerateObservationError, KernelDomainError
from src.models.basis import ModelMatrices
from src.models.posterior import BetaPosterior, SigmaPosterior
from src.utils.linalg import symmetrize

from .state import CorrelationBatch, CorrelationState


def log_abs_det_trend(mm: ModelMatrices) -> float:
    """log |det P'H|, the θ-free Jacobian between β and the P-coordinates of Hβ."""
    if mm.p == 0:
        return 0.0
    _, logdet = np.linalg.slogdet(mm.trend_coordinates)
    return float(logdet)


def checked_quadratic_form(y: np.ndarray, state: CorrelationState) -> float:
    """
    y'W(W'ΣW)^-1W'y, rejecting y in span(H).

    Raises:
        DegenerateObservationError: if W'y vanishes relative to y or the form
            falls below the configured threshold.
    """
    y = np.asarray(y, dtype=float)
    wy = state.matrices.W.T @ y
    if np.linalg.norm(wy) <= settings.span_rtol * max(np.linalg.norm(y), 1e-300):
        raise DegenerateObservationError("observations lie in the span of the trend basis")
    q = state.quadratic_form(y)
    if not np.isfinite(q) or q <= settings.degenerate_threshold:
        raise DegenerateObservationError(f"non-positive quadratic form y'W(W'ΣW)^-1W'y = {q}")
    return q


def integrated_likelihood_L1(y: np.ndarray, state: CorrelationState) -> float:
    """
    log L1(y|θ), β and σ² integrated out.

        log Γ(m/2) - (m/2) log π - ½ log|W'ΣW| - (m/2) log q - log|det P'H|

    with m = n - p and q the quadratic form.
    """
    mm = state.matrices
    m = mm.m
    q = checked_quadratic_form(y, state)
    return float(
        special.gammaln(m / 2.0)
        - 0.5 * m * np.log(np.pi)
        - 0.5 * state.log_det_projected
        - 0.5 * m * np.log(q)
        - log_abs_det_trend(mm)
    )


def integrated_likelihood_L0(y: np.ndarray, sigma2: float, state: CorrelationState) -> float:
    """log L0(y|σ², θ), β integrated out under a flat prior."""
    if not sigma2 > 0:
        raise KernelDomainError(f"σ² must be positive, got {sigma2}")
    mm = state.matrices
    m = mm.m
    q = checked_quadratic_form(y, state)
    return float(
        -0.5 * m * np.log(2.0 * np.pi * sigma2)
        - 0.5 * state.log_det_projected
        - 0.5 * q / sigma2
        - log_abs_det_trend(mm)
    )


def beta_posterior(y: np.ndarray, sigma2: float, state: CorrelationState) -> BetaPosterior:
    """
    Posterior of β given σ² and θ, written with the orthonormal split:

        mean = (P'H)^-1 (P'y - P'ΣW (W'ΣW)^-1 W'y)
        cov  = σ² (P'H)^-1 [P'ΣP - P'ΣW (W'ΣW)^-1 W'ΣP] (H'P)^-1
    """
    if not sigma2 > 0:
        raise KernelDomainError(f"σ² must be positive, got {sigma2}")
    mm = state.matrices
    if mm.p == 0:
        return BetaPosterior(mean=np.zeros(0), covariance=np.zeros((0, 0)))
    y = np.asarray(y, dtype=float)
    P, W, S = mm.P, mm.W, state.sigma
    ps_w = P.T @ S @ W
    tc = mm.trend_coordinates
    if mm.m > 0:
        correction = ps_w @ state.projected_solve(W.T @ y)
        inner = P.T @ S @ P - ps_w @ state.projected_solve(ps_w.T)
    else:
        correction = np.zeros(mm.p)
        inner = P.T @ S @ P
    mean = np.linalg.solve(tc, P.T @ y - correction)
    tc_inv = np.linalg.inv(tc)
    cov = sigma2 * tc_inv @ inner @ tc_inv.T
    return BetaPosterior(mean=mean, covariance=symmetrize(cov))


def sigma2_posterior(y: np.ndarray, state: CorrelationState) -> SigmaPosterior:
    """Inverse-Gamma(shape=(n-p)/2, rate=q/2) posterior of σ² given θ."""
    q = checked_quadratic_form(y, state)
    posterior = SigmaPosterior(shape=state.matrices.m / 2.0, rate=q / 2.0)
    if posterior.shape <= 1:
        logger.debug("σ² posterior has no finite mean (n - p <= 2)")
    return posterior


def projector_Q(state: CorrelationState) -> np.ndarray:
    """Q_θ = I - H(H'Σ^-1H)^-1 H'Σ^-1; idempotent with Q H = 0."""
    return state.projector


def batch_integrated_likelihood_L1(y: np.ndarray, batch: CorrelationBatch) -> np.ndarray:
    """log L1 over a θ stack; members that cannot be factorised get -inf."""
    mm = batch.matrices
    y = np.asarray(y, dtype=float)
    wy = mm.W.T @ y
    if np.linalg.norm(wy) <= settings.span_rtol * max(np.linalg.norm(y), 1e-300):
        raise DegenerateObservationError("observations lie in the span of the trend basis")
    m = mm.m
    q = batch.quadratic_form(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (
            special.gammaln(m / 2.0)
            - 0.5 * m * np.log(np.pi)
            - 0.5 * batch.log_det_projected()
            - 0.5 * m * np.log(q)
            - log_abs_det_trend(mm)
        )
    ok = batch.valid & np.isfinite(out) & (q > settings.degenerate_threshold)
    return np.where(ok, out, -np.inf)
