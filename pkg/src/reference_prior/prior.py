"""
Conditional reference priors on the correlation lengths.

For coordinate i with the others held fixed,

    f_i(θ_i | θ_-i) ∝ sqrt( Tr[C²] - Tr[C]² / (n - p) ),
    C = (W'ΣW)^-1 W' ∂Σ/∂θ_i W,

evaluated through the Cholesky factor of W'ΣW. The density in μ_i = 1/θ_i is
θ_i² times the density in θ_i. Values are unnormalised: raw f_i are only
meaningful up to a factor that may differ between coordinates.
"""

from typing import Tuple

import numpy as np
from loguru import logger

from src.config.settings import settings
from src.errors import FactorizationError, KernelDomainError, PriorBoundError
from src.kernels.correlation import corr_matrix_deriv_mu
from src.linear_model.context import KrigingContext
from src.linear_model.state import CorrelationBatch, trace_terms
from src.models.design import LengthVector
from src.models.enums import Parametrization
from src.models.posterior import ConditionalPriorEval
from src.utils.linalg import cho_solve


def prior_upper_bound(context: KrigingContext) -> float:
    """(n - p)(2ν + r): bounds μ_i f_i(μ_i | μ_-i), equivalently θ_i f_i(θ_i | θ_-i)."""
    return context.matrices.m * (2.0 * context.kernel.nu + context.r)


def _radicand_value(trace: float, trace_sq: float, m: int) -> Tuple[float, bool]:
    radicand = trace_sq - trace**2 / m
    if radicand >= 0:
        return float(np.sqrt(radicand)), False
    if -radicand <= settings.radicand_clamp * abs(trace_sq):
        logger.debug(f"Prior radicand {radicand:.3e} clamped to 0")
        return 0.0, True
    raise FactorizationError(
        f"negative prior radicand {radicand:.3e} (Tr C² = {trace_sq:.3e}): ill-conditioned W'ΣW"
    )


def check_prior_bound(theta_i: float, value_theta: float, context: KrigingContext) -> None:
    bound = prior_upper_bound(context)
    scaled = theta_i * value_theta
    if scaled > bound * (1.0 + 1e-9):
        message = f"conditional prior bound violated: θ_i f_i = {scaled:.6g} > {bound:.6g}"
        if settings.strict_prior_bound:
            raise PriorBoundError(message)
        logger.error(message)


def _evaluate(
    i: int,
    lengths: LengthVector,
    trace: float,
    trace_sq: float,
    context: KrigingContext,
    parametrization: Parametrization,
) -> ConditionalPriorEval:
    value, clamped = _radicand_value(trace, trace_sq, context.matrices.m)
    theta_i = float(lengths.theta[i])
    check_prior_bound(theta_i, value, context)
    if parametrization == Parametrization.MU:
        # ∂Σ/∂μ_i = -θ_i² ∂Σ/∂θ_i
        scale = -(theta_i**2)
        return ConditionalPriorEval(
            i=i,
            value=value * theta_i**2,
            trace_term=trace * scale,
            trace_sq_term=trace_sq * scale**2,
            parametrization=parametrization,
            clamped=clamped,
        )
    return ConditionalPriorEval(
        i=i, value=value, trace_term=trace, trace_sq_term=trace_sq, clamped=clamped
    )


def _check_index(i: int, context: KrigingContext) -> None:
    if not 0 <= i < context.r:
        raise KernelDomainError(f"coordinate index {i} out of range for r={context.r}")


def conditional_prior(
    i: int,
    lengths: LengthVector,
    context: KrigingContext,
    parametrization: Parametrization = Parametrization.THETA,
) -> ConditionalPriorEval:
    """Conditional reference prior of coordinate i (zero-based) given the others."""
    _check_index(i, context)
    state = context.state(lengths)
    trace, trace_sq = trace_terms(state.projected_factor, state.projected_derivative(i))
    return _evaluate(i, lengths, float(trace), float(trace_sq), context, Parametrization(parametrization))


def conditional_prior_berger(
    i: int,
    lengths: LengthVector,
    context: KrigingContext,
    parametrization: Parametrization = Parametrization.THETA,
) -> ConditionalPriorEval:
    """Same density computed through Q_θ: D = ∂Σ Σ^-1 Q_θ in place of C."""
    _check_index(i, context)
    state = context.state(lengths)
    D = state.derivative(i) @ cho_solve(state.sigma_factor, state.projector)
    trace = float(np.trace(D))
    trace_sq = float(np.sum(D * D.T))
    return _evaluate(i, lengths, trace, trace_sq, context, Parametrization(parametrization))


def _single_length(theta: float, context: KrigingContext) -> LengthVector:
    if context.r != 1:
        raise KernelDomainError(f"the one-dimensional prior needs r = 1, got r={context.r}")
    return LengthVector(theta=[theta])


def prior_1d(theta: float, context: KrigingContext) -> float:
    """Reference prior density (unnormalised) of a single correlation length."""
    return conditional_prior(0, _single_length(theta, context), context).value


def prior_1d_berger(theta: float, context: KrigingContext) -> float:
    return conditional_prior_berger(0, _single_length(theta, context), context).value


def log_conditional_prior_batch(
    i: int, batch: CorrelationBatch, context: KrigingContext
) -> np.ndarray:
    """log f_i in θ-form over the θ stack of `batch`; -inf where undefined."""
    _check_index(i, context)
    trace, trace_sq = batch.trace_terms(i)
    m = context.matrices.m
    radicand = trace_sq - trace**2 / m
    tolerated = -radicand <= settings.radicand_clamp * np.abs(trace_sq)
    ok = batch.valid & np.isfinite(radicand) & ((radicand > 0) | tolerated)
    value = np.sqrt(np.clip(radicand, 0.0, None))
    if ok.any():
        scaled = batch.thetas[ok, i] * value[ok]
        bound = prior_upper_bound(context)
        worst = float(scaled.max())
        if worst > bound * (1.0 + 1e-9):
            message = f"conditional prior bound violated on grid: θ_i f_i = {worst:.6g} > {bound:.6g}"
            if settings.strict_prior_bound:
                raise PriorBoundError(message)
            logger.error(message)
    with np.errstate(divide="ignore"):
        return np.where(ok, np.log(value), -np.inf)


def log_prior_product(lengths: LengthVector, context: KrigingContext) -> float:
    """Σ_i log f_i(θ_i | θ_-i), the pseudo log-prior used by the MAP estimator."""
    total = 0.0
    for i in range(context.r):
        value = conditional_prior(i, lengths, context).value
        if value <= 0:
            return -np.inf
        total += np.log(value)
    return float(total)


def prior_envelope_h(i: int, lengths: LengthVector, context: KrigingContext) -> float:
    """‖∂Σ/∂μ_i‖_F, which sandwiches f_i in μ-form at low correlation."""
    _check_index(i, context)
    deriv = corr_matrix_deriv_mu(context.design, lengths, i, context.kernel)
    return float(np.linalg.norm(deriv, "fro"))


def sphere_quadratic_variance(M: np.ndarray) -> float:
    """
    Tr[M²] - Tr[M]²/n. For U uniform on the unit sphere of R^n,
    Var(U'MU) equals this value times 2 / (n (n + 2)).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    n = M.shape[0]
    return float(max(np.sum(M * M) - np.trace(M) ** 2 / n, 0.0))
