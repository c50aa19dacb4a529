"""
Plug-in estimators of the correlation lengths.

Both maximise over log θ with bounded Nelder-Mead from Latin-hypercube
restarts: the MLE maximises log L1(y|θ), the MAP adds Σ_i log f_i(θ_i|θ_-i),
the product of the conditional reference priors taken as a pseudo-density.
"""

from typing import Callable, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy import optimize
from scipy.stats import qmc

from src.errors import EstimationError, KrigingError
from src.linear_model.context import KrigingContext
from src.models.design import LengthVector
from src.models.optim import OptimResult, RestartTrace
from src.reference_prior.prior import log_prior_product

LogPrior = Callable[[LengthVector, KrigingContext], float]

DEFAULT_BOX = (1e-3, 1e3)
DEFAULT_RESTARTS = 10
BOUNDARY_TOL = 1e-6


def _objective_factory(
    y: np.ndarray, context: KrigingContext, log_prior: Optional[LogPrior], in_mu: bool
) -> Callable[[np.ndarray], float]:
    def negative(v: np.ndarray) -> float:
        log_theta = -v if in_mu else v
        try:
            lengths = LengthVector(theta=np.exp(log_theta))
            value = context.log_integrated_likelihood(y, lengths)
            if log_prior is not None:
                value += log_prior(lengths, context)
        except (KrigingError, ValueError):
            return np.inf
        return -value if np.isfinite(value) else np.inf

    return negative


def _starts(r: int, restarts: int, seed: int, bounds: Tuple[float, float]) -> np.ndarray:
    sampler = qmc.LatinHypercube(d=r, rng=np.random.default_rng(seed))
    unit = sampler.random(restarts)
    lo, hi = np.log(bounds[0]), np.log(bounds[1])
    return lo + unit * (hi - lo)


def maximise(
    y: np.ndarray,
    context: KrigingContext,
    log_prior: Optional[LogPrior] = None,
    box: Tuple[float, float] = DEFAULT_BOX,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    parametrization: str = "log_theta",
) -> OptimResult:
    """
    Multi-start maximisation of log L1 (+ log prior) over the box [box]^r.

    Args:
        parametrization: "log_theta" or "log_mu", the optimiser's variable.

    Raises:
        EstimationError: if no restart reaches a finite objective.
    """
    if parametrization not in ("log_theta", "log_mu"):
        raise ValueError(f"unknown parametrization {parametrization!r}")
    if not 0 < box[0] < box[1]:
        raise ValueError(f"invalid search box {box}")
    y = np.asarray(y, dtype=float)
    in_mu = parametrization == "log_mu"
    r = context.r
    negative = _objective_factory(y, context, log_prior, in_mu)
    log_lo, log_hi = np.log(box[0]), np.log(box[1])
    bounds = [(-log_hi, -log_lo)] * r if in_mu else [(log_lo, log_hi)] * r

    traces: List[RestartTrace] = []
    best: Optional[Tuple[float, np.ndarray, bool]] = None
    for start in _starts(r, restarts, seed, box):
        x0 = -start if in_mu else start
        init_value = negative(x0)
        res = optimize.minimize(
            negative,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 2000 * r, "adaptive": r > 2},
        )
        final = res.x if res.fun <= init_value else x0
        value = min(float(res.fun), init_value)
        log_theta = -final if in_mu else final
        traces.append(
            RestartTrace(
                init_theta=np.exp(start).tolist(),
                final_theta=np.exp(log_theta).tolist(),
                init_objective=-init_value,
                objective=-value,
                evaluations=int(res.nfev),
                success=bool(res.success),
            )
        )
        if np.isfinite(value) and (best is None or value < best[0]):
            best = (value, log_theta, bool(res.success))

    if best is None:
        raise EstimationError(f"all {restarts} restarts failed to reach a finite objective")
    value, log_theta, success = best
    on_boundary = bool(
        np.any(log_theta <= log_lo + BOUNDARY_TOL) or np.any(log_theta >= log_hi - BOUNDARY_TOL)
    )
    if on_boundary:
        logger.warning(f"Estimate {np.exp(log_theta)} lies on the search box boundary")
    return OptimResult(
        theta=LengthVector(theta=np.exp(log_theta)),
        objective=-value,
        n_restarts=restarts,
        converged=success and not on_boundary,
        trace=traces,
    )


def mle(
    y: np.ndarray,
    context: KrigingContext,
    box: Tuple[float, float] = DEFAULT_BOX,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    parametrization: str = "log_theta",
) -> OptimResult:
    """Maximiser of the integrated likelihood log L1(y|θ)."""
    result = maximise(y, context, None, box, restarts, seed, parametrization)
    logger.debug(f"MLE θ̂ = {result.theta.theta}, log L1 = {result.objective:.6g}")
    return result


def map_estimate(
    y: np.ndarray,
    context: KrigingContext,
    box: Tuple[float, float] = DEFAULT_BOX,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    parametrization: str = "log_theta",
    log_prior: LogPrior = log_prior_product,
) -> OptimResult:
    """Maximiser of log L1(y|θ) + Σ_i log f_i(θ_i | θ_-i), densities taken in θ."""
    result = maximise(y, context, log_prior, box, restarts, seed, parametrization)
    logger.debug(f"MAP θ̂ = {result.theta.theta}, objective = {result.objective:.6g}")
    return result
