"""Marginal CDFs, quantiles and equal-tailed prediction intervals."""

from typing import Tuple, Union

import numpy as np
from scipy import optimize, stats

from src.errors import KernelDomainError
from src.models.predictive import BetaMarginalized, KnownAll, Mixture, Student

Predictive = Union[KnownAll, BetaMarginalized, Student, Mixture]


def point_prediction(dist: Predictive) -> np.ndarray:
    if isinstance(dist, Student):
        return dist.location
    return dist.mean


def _component_cdf(x: float, loc: np.ndarray, scale: np.ndarray, dof: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (x - loc) / np.where(scale > 0, scale, 1.0)
        smooth = stats.t.cdf(z, dof)
    return np.where(scale > 0, smooth, (x >= loc).astype(float))


def marginal_cdf(dist: Predictive, target: int, x: float) -> float:
    if isinstance(dist, Mixture):
        loc, scale, dof = dist.component_arrays
        return float(np.mean(_component_cdf(x, loc[:, target], scale[:, target], dof)))
    if isinstance(dist, Student):
        s = dist.marginal_scale()[target]
        if s == 0:
            return float(x >= dist.location[target])
        return float(stats.t.cdf((x - dist.location[target]) / s, dist.dof))
    sd = dist.marginal_sd()[target]
    if sd == 0:
        return float(x >= dist.mean[target])
    return float(stats.norm.cdf((x - dist.mean[target]) / sd))


def _mixture_quantile(loc: np.ndarray, scale: np.ndarray, dof: np.ndarray, prob: float) -> float:
    # the mixture quantile lies between the smallest and largest component quantiles
    comp = loc + scale * stats.t.ppf(prob, dof)
    lo, hi = float(comp.min()), float(comp.max())
    if hi - lo <= 1e-14 * max(1.0, abs(lo)):
        return lo

    def excess(x: float) -> float:
        return float(np.mean(_component_cdf(x, loc, scale, dof))) - prob

    if excess(lo) >= 0:
        return lo
    return float(optimize.brentq(excess, lo, hi, xtol=1e-12 * max(1.0, hi - lo), rtol=1e-12))


def marginal_quantile(dist: Predictive, target: int, prob: float) -> float:
    if not 0 < prob < 1:
        raise KernelDomainError(f"probability must lie in (0, 1), got {prob}")
    if isinstance(dist, Mixture):
        loc, scale, dof = dist.component_arrays
        return _mixture_quantile(loc[:, target], scale[:, target], dof, prob)
    if isinstance(dist, Student):
        return float(dist.location[target] + dist.marginal_scale()[target] * stats.t.ppf(prob, dist.dof))
    return float(dist.mean[target] + dist.marginal_sd()[target] * stats.norm.ppf(prob))


def prediction_interval(dist: Predictive, target: int, level: float) -> Tuple[float, float]:
    """Equal-tailed interval (F^-1((1 - level)/2), F^-1((1 + level)/2)) at one target."""
    if not 0 < level < 1:
        raise KernelDomainError(f"level must lie in (0, 1), got {level}")
    lo = marginal_quantile(dist, target, 0.5 * (1.0 - level))
    hi = marginal_quantile(dist, target, 0.5 * (1.0 + level))
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise KernelDomainError(f"non-finite prediction interval at target {target}")
    return lo, hi


def prediction_intervals(dist: Predictive, level: float) -> Tuple[np.ndarray, np.ndarray]:
    """Marginal equal-tailed intervals at every target."""
    if not 0 < level < 1:
        raise KernelDomainError(f"level must lie in (0, 1), got {level}")
    if isinstance(dist, Mixture):
        bounds = np.array([prediction_interval(dist, t, level) for t in range(dist.n_targets)])
        return bounds[:, 0], bounds[:, 1]
    if isinstance(dist, Student):
        centre, spread, q = dist.location, dist.marginal_scale(), stats.t.ppf(0.5 * (1 + level), dist.dof)
    else:
        centre, spread, q = dist.mean, dist.marginal_sd(), stats.norm.ppf(0.5 * (1 + level))
    half = q * spread
    if not np.all(np.isfinite(half)):
        raise KernelDomainError("non-finite predictive scale")
    return centre - half, centre + half
