"""
Random-scan Gibbs sampler for the Gibbs reference posterior.

Each step picks a coordinate uniformly at random and redraws it exactly, by
inverse CDF, from its conditional posterior

    π_i(θ_i | y, θ_-i) ∝ L1(y | θ) f_i(θ_i | θ_-i),

tabulated on an adaptive grid in log θ_i. The kernel is therefore the mixture
(1/r) Σ_i π_i(·|y, θ_-i) ⊗ δ(θ_-i) up to grid discretisation.
"""

import math
from collections import OrderedDict
from typing import Dict, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.integrate import cumulative_trapezoid

from src.config.settings import settings
from src.errors import ExistenceViolationError, FactorizationError, KernelDomainError
from src.linear_model.context import KrigingContext
from src.linear_model.marginal import batch_integrated_likelihood_L1
from src.models.chain import ChainConfig, ChainDiagnostics, ChainOutput, ConditionalGrid
from src.models.design import LengthVector
from src.reference_prior.prior import log_conditional_prior_batch

from .diagnostics import effective_sample_size, monte_carlo_standard_error, split_rhat

COARSE_POINTS_PER_DECADE = 12
RHAT_WARNING = 1.05


def _chunk_size(context: KrigingContext) -> int:
    return max(1, int(2_000_000 // (context.n * context.n * context.r)))


def log_conditional_density(
    i: int, lengths: LengthVector, log_theta_i: np.ndarray, y: np.ndarray, context: KrigingContext
) -> np.ndarray:
    """log L1 + log f_i + log θ_i: the conditional density of u = log θ_i, unnormalised."""
    log_theta_i = np.asarray(log_theta_i, dtype=float)
    out = np.empty_like(log_theta_i)
    step = _chunk_size(context)
    for start in range(0, log_theta_i.size, step):
        chunk = log_theta_i[start : start + step]
        thetas = np.tile(lengths.theta, (chunk.size, 1))
        thetas[:, i] = np.exp(chunk)
        batch = context.batch(thetas)
        log_l1 = batch_integrated_likelihood_L1(y, batch)
        log_prior = log_conditional_prior_batch(i, batch, context)
        out[start : start + step] = log_l1 + log_prior + chunk
    return out


def _adaptive_range(
    i: int, lengths: LengthVector, y: np.ndarray, context: KrigingContext
) -> Tuple[float, float, bool, bool]:
    lo = math.log(settings.grid_theta_min)
    hi = math.log(settings.grid_theta_max)
    step = math.log(settings.grid_extension_factor)
    ext_lo = ext_hi = 0
    while True:
        size = max(24, int(math.ceil(COARSE_POINTS_PER_DECADE * (hi - lo) / math.log(10))) + 1)
        u = np.linspace(lo, hi, size)
        ld = log_conditional_density(i, lengths, u, y, context)
        finite = np.isfinite(ld)
        if not finite.any():
            raise FactorizationError(f"conditional density of θ_{i} is nowhere finite on the grid")
        threshold = ld[finite].max() - settings.tail_log_ratio
        idx = np.flatnonzero(finite)
        singular_lo, singular_hi = not finite[0], not finite[-1]
        need_lo = finite[0] and ld[0] > threshold
        need_hi = finite[-1] and ld[-1] > threshold
        extended = False
        if need_lo and ext_lo < settings.grid_max_extensions:
            lo -= step
            ext_lo += 1
            extended = True
        if need_hi and ext_hi < settings.grid_max_extensions:
            hi += step
            ext_hi += 1
            extended = True
        if not extended:
            break

    if need_lo or need_hi:
        side = "lower" if need_lo else "upper"
        raise ExistenceViolationError(
            f"{side} tail of the conditional posterior of θ_{i} does not decay on "
            f"[{math.exp(lo):.3g}, {math.exp(hi):.3g}]"
        )
    hi_cut = bool(singular_hi and ld[idx[-1]] > threshold)
    lo_cut = bool(singular_lo and ld[idx[0]] > threshold)
    if hi_cut:
        logger.warning(
            f"Upper tail of θ_{i} truncated at {math.exp(u[idx[-1]]):.3g} by numerical singularity"
        )
    if lo_cut:
        logger.warning(
            f"Lower tail of θ_{i} truncated at {math.exp(u[idx[0]]):.3g} by numerical singularity"
        )

    keep = np.flatnonzero(finite & (ld >= threshold))
    a = u[max(keep[0] - 1, idx[0])]
    b = u[min(keep[-1] + 1, idx[-1])]
    if b - a < 1e-6:
        a, b = a - 1e-3, b + 1e-3
    return a, b, hi_cut, lo_cut


def _tabulate(
    i: int, u: np.ndarray, lengths: LengthVector, y: np.ndarray, context: KrigingContext
) -> Tuple[np.ndarray, np.ndarray]:
    ld = log_conditional_density(i, lengths, u, y, context)
    finite = np.isfinite(ld)
    if not finite.any():
        raise FactorizationError(f"conditional density of θ_{i} is nowhere finite on the grid")
    weights = np.where(finite, np.exp(ld - ld[finite].max()), 0.0)
    cdf = cumulative_trapezoid(weights, u, initial=0.0)
    total = cdf[-1]
    if not total > 0:
        raise FactorizationError(f"conditional posterior of θ_{i} has no mass on the grid")
    cdf = cdf / total
    cdf[-1] = 1.0
    return ld, cdf


def _hint_is_adequate(ld: np.ndarray) -> bool:
    # edges decayed (or unevaluable) and the bulk covers a fair share of the nodes
    finite = np.isfinite(ld)
    threshold = ld[finite].max() - settings.tail_log_ratio
    edges_ok = all((not finite[k]) or ld[k] <= threshold for k in (0, -1))
    return edges_ok and np.count_nonzero(ld >= threshold) >= ld.size // 4


def conditional_posterior_grid(
    i: int,
    lengths: LengthVector,
    y: np.ndarray,
    context: KrigingContext,
    grid_size: Optional[int] = None,
    truncation: Optional[Tuple[float, float]] = None,
    hint: Optional[Tuple[float, float]] = None,
) -> ConditionalGrid:
    """
    Tabulate the conditional posterior of θ_i given θ_-i (read from `lengths`).

    Args:
        truncation: Fixed θ_i bounds; disables adaptive truncation.
        hint: Log-θ range of a previous table of the same coordinate, tried
            first and kept if its edges have decayed.

    Raises:
        ExistenceViolationError: if a boundary density is still within
            exp(-tail_log_ratio) of the peak after the maximum number of extensions.
    """
    if not 0 <= i < context.r:
        raise KernelDomainError(f"coordinate index {i} out of range for r={context.r}")
    size = grid_size or settings.grid_size
    if truncation is not None:
        u = np.linspace(math.log(truncation[0]), math.log(truncation[1]), size)
        ld, cdf = _tabulate(i, u, lengths, y, context)
        return ConditionalGrid(i=i, log_theta=u, log_density=ld, cdf=cdf)

    if hint is not None:
        u = np.linspace(hint[0], hint[1], size)
        try:
            ld, cdf = _tabulate(i, u, lengths, y, context)
        except FactorizationError:
            ld = None
        if ld is not None and _hint_is_adequate(ld):
            return ConditionalGrid(i=i, log_theta=u, log_density=ld, cdf=cdf)

    a, b, hi_cut, lo_cut = _adaptive_range(i, lengths, y, context)
    u = np.linspace(a, b, size)
    ld, cdf = _tabulate(i, u, lengths, y, context)
    return ConditionalGrid(
        i=i, log_theta=u, log_density=ld, cdf=cdf, singular_upper=hi_cut, singular_lower=lo_cut
    )


class GibbsSampler:
    """Owns the observations, the grid cache and the counters of one chain."""

    def __init__(
        self,
        context: KrigingContext,
        y: np.ndarray,
        config: Optional[ChainConfig] = None,
        cache_size: Optional[int] = None,
    ):
        self.context = context
        self.y = np.asarray(y, dtype=float)
        if self.y.shape != (context.n,):
            raise KernelDomainError(f"expected {context.n} observations, got shape {self.y.shape}")
        self.config = config or ChainConfig()
        self._cache: "OrderedDict[tuple, ConditionalGrid]" = OrderedDict()
        self._cache_size = cache_size or 2 * context.r
        self._ranges: Dict[int, Tuple[float, float]] = {}
        self.cache_hits = 0
        self.grid_builds = 0
        self.singular_truncations = 0

    def conditional_grid(self, i: int, lengths: LengthVector) -> ConditionalGrid:
        # the table depends on θ_-i only
        key = (i, tuple(float(t) for j, t in enumerate(lengths.theta) if j != i))
        grid = self._cache.get(key)
        if grid is not None:
            self.cache_hits += 1
            self._cache.move_to_end(key)
            return grid
        grid = conditional_posterior_grid(
            i,
            lengths,
            self.y,
            self.context,
            self.config.grid_size,
            self.config.truncation,
            hint=self._ranges.get(i),
        )
        self._ranges[i] = (float(grid.log_theta[0]), float(grid.log_theta[-1]))
        self.grid_builds += 1
        if grid.singular_upper:
            self.singular_truncations += 1
        self._cache[key] = grid
        while len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return grid

    def step(self, lengths: LengthVector, rng: np.random.Generator) -> Tuple[LengthVector, int]:
        """One random-scan update; returns the new point and the coordinate that moved."""
        i = int(rng.integers(self.context.r))
        grid = self.conditional_grid(i, lengths)
        value = float(grid.quantile(rng.random()))
        return lengths.with_coordinate(i, value), i

    def initial_point(self) -> LengthVector:
        init = self.config.init
        if init is None:
            return LengthVector(theta=self.context.design.half_ranges())
        if init.r != self.context.r:
            raise KernelDomainError(f"initial θ has {init.r} coordinates, model has {self.context.r}")
        return init

    def run(self) -> ChainOutput:
        cfg = self.config
        r = self.context.r
        rng = np.random.default_rng(cfg.seed)
        current = self.initial_point()
        counts = np.zeros(r, dtype=int)
        kept = np.empty((cfg.n_retained, r))
        row = 0
        logger.info(
            f"Gibbs chain: {cfg.n_iter} sweeps ({cfg.burn_in} burn-in, thin {cfg.thin}), r={r}, seed={cfg.seed}"
        )
        report_every = max(1, cfg.n_iter // 10)
        for sweep in range(1, cfg.n_iter + 1):
            for _ in range(r):
                current, i = self.step(current, rng)
                counts[i] += 1
            if sweep > cfg.burn_in and (sweep - cfg.burn_in) % cfg.thin == 0:
                kept[row] = current.theta
                row += 1
            if sweep % report_every == 0:
                logger.debug(f"sweep {sweep}/{cfg.n_iter}, grid builds {self.grid_builds}")

        log_l1 = np.array([self.context.log_integrated_likelihood(self.y, t) for t in kept])
        if not np.all(np.isfinite(log_l1)):
            raise FactorizationError("non-finite integrated likelihood at a retained sample")
        diagnostics = ChainDiagnostics(
            ess=[effective_sample_size(kept[:, j]) for j in range(r)],
            split_rhat=[split_rhat(kept[:, j]) for j in range(r)],
            mcse=[monte_carlo_standard_error(kept[:, j]) for j in range(r)],
            grid_cache_hits=self.cache_hits,
            grid_builds=self.grid_builds,
            singular_truncations=self.singular_truncations,
        )
        worst = max((v for v in diagnostics.split_rhat if np.isfinite(v)), default=1.0)
        if worst > RHAT_WARNING:
            logger.warning(f"Split-chain R-hat {worst:.3f} exceeds {RHAT_WARNING}; chain may not have mixed")
        logger.success(
            f"Chain finished: {row} samples, min ESS {min(diagnostics.ess):.0f}, max R-hat {worst:.3f}"
        )
        return ChainOutput(
            theta=kept,
            log_l1=log_l1,
            update_counts=counts.tolist(),
            diagnostics=diagnostics,
            config=cfg,
        )


def gibbs_step(
    lengths: LengthVector,
    y: np.ndarray,
    rng: np.random.Generator,
    context: KrigingContext,
    config: Optional[ChainConfig] = None,
) -> LengthVector:
    return GibbsSampler(context, y, config).step(lengths, rng)[0]


def run_chain(y: np.ndarray, context: KrigingContext, config: ChainConfig) -> ChainOutput:
    return GibbsSampler(context, y, config).run()
