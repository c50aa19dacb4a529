"""
Coverage experiments: average coverage and average mean length of prediction
intervals over random designs, realisations and test points.

Each replicate draws its design, test points and responses from its own
generator seeded by (master seed, replicate index), so results do not depend
on the number of worker threads or the order replicates finish in.
"""

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from src.config.settings import settings
from src.errors import ExistenceViolationError, KrigingError
from src.estimation.optimizer import map_estimate, mle
from src.existence.checklist import check_existence
from src.linear_model.context import KrigingContext
from src.models.basis import TrendBasis
from src.models.chain import ChainConfig
from src.models.design import DesignSet, LengthVector
from src.models.enums import BenchFunction, Method
from src.models.experiment import (
    BenchResult,
    DeterministicGenerator,
    ExperimentConfig,
    GaussianProcessGenerator,
    MethodSummary,
    ReplicateFailure,
    ReplicateRecord,
)
from src.models.kernel import KernelSpec
from src.prediction.intervals import Predictive, prediction_intervals
from src.prediction.predictive import predict_full_bayes, predict_known_mean, predict_student
from src.sampling.gibbs_sampler import GibbsSampler
from src.utils.misc_utils import derive_seed, replicate_rng

from .functions import ackley, rastrigin
from .simulation import generator_kernel_spec, sample_gp

# sub-streams of a replicate seed
_CHAIN_STREAM = 1
_MLE_STREAM = 2
_MAP_STREAM = 3


@dataclass
class Replicate:
    """One random design with its test points and the responses at both."""

    index: int
    design: DesignSet
    targets: DesignSet
    y: np.ndarray
    truth: np.ndarray
    mean_design: Optional[np.ndarray] = None
    mean_targets: Optional[np.ndarray] = None


@dataclass
class ReplicateOutcome:
    index: int
    records: List[ReplicateRecord] = field(default_factory=list)
    failures: List[ReplicateFailure] = field(default_factory=list)


def model_context(cfg: ExperimentConfig, design: DesignSet) -> KrigingContext:
    kernel = KernelSpec(family=cfg.family, nu=cfg.nu, dim=cfg.r)
    return KrigingContext(design, kernel, TrendBasis(kind=cfg.basis))


def deterministic_values(gen: DeterministicGenerator, points: np.ndarray) -> np.ndarray:
    if gen.function == BenchFunction.ACKLEY:
        return np.asarray(ackley(points))
    return np.asarray(rastrigin(points, gen.linear_slope))


def draw_replicate(cfg: ExperimentConfig, index: int) -> Replicate:
    """Uniform design and test points on (0, 1)^r, responses at both from one realisation."""
    rng = replicate_rng(cfg.seed, index)
    design_pts = rng.random((cfg.n, cfg.r))
    target_pts = rng.random((cfg.n_tests, cfg.r))
    design, targets = DesignSet(points=design_pts), DesignSet(points=target_pts)
    gen = cfg.generator
    if isinstance(gen, DeterministicGenerator):
        return Replicate(
            index=index,
            design=design,
            targets=targets,
            y=deterministic_values(gen, design_pts),
            truth=deterministic_values(gen, target_pts),
        )
    joint = design.concat(targets).points
    mean = gen.mean.values(joint)
    values = sample_gp(
        joint, mean, gen.sigma2, LengthVector(theta=gen.theta), rng, gen.kernel, gen.nu, gen.family
    )
    return Replicate(
        index=index,
        design=design,
        targets=targets,
        y=values[: cfg.n],
        truth=values[cfg.n :],
        mean_design=mean[: cfg.n],
        mean_targets=mean[cfg.n :],
    )


def _predictive(
    method: Method, rep: Replicate, context: KrigingContext, cfg: ExperimentConfig
) -> Predictive:
    seed = derive_seed(cfg.seed, rep.index)
    if method == Method.TRUE:
        gen = cfg.generator
        assert isinstance(gen, GaussianProcessGenerator)
        truth_context = KrigingContext(rep.design, generator_kernel_spec(gen, cfg.r), context.basis)
        return predict_known_mean(
            rep.targets,
            rep.y,
            rep.mean_design,
            rep.mean_targets,
            gen.sigma2,
            gen.theta,
            truth_context,
            marginal=True,
        )
    if method in (Method.MLE, Method.MAP):
        estimator = mle if method == Method.MLE else map_estimate
        stream = _MLE_STREAM if method == Method.MLE else _MAP_STREAM
        fit = estimator(rep.y, context, restarts=cfg.restarts, seed=derive_seed(seed, stream))
        if not fit.converged:
            logger.debug(f"replicate {rep.index}: {method.value} estimate {fit.theta.theta} not converged")
        return predict_student(rep.targets, rep.y, fit.theta, context, marginal=True)
    chain_cfg = ChainConfig(
        n_iter=cfg.chain_iter, burn_in=cfg.chain_burn_in, seed=derive_seed(seed, _CHAIN_STREAM)
    )
    chain = GibbsSampler(context, rep.y, chain_cfg).run()
    return predict_full_bayes(
        rep.targets, rep.y, chain, context, marginal=True, max_components=cfg.fpd_components
    )


def score_intervals(
    dist: Predictive, truth: np.ndarray, level: float
) -> Tuple[float, float]:
    """Fraction of targets whose value falls in its interval, and the mean interval length."""
    lo, hi = prediction_intervals(dist, level)
    hits = (truth >= lo) & (truth <= hi)
    return float(np.mean(hits)), float(np.mean(hi - lo))


def run_replicate(cfg: ExperimentConfig, index: int) -> ReplicateOutcome:
    outcome = ReplicateOutcome(index=index)
    try:
        rep = draw_replicate(cfg, index)
        context = model_context(cfg, rep.design)
    except KrigingError as e:
        logger.warning(f"Replicate {index} could not be generated: {e}")
        outcome.failures.append(ReplicateFailure(index=index, reason=str(e)))
        return outcome

    for method in cfg.methods:
        try:
            dist = _predictive(method, rep, context, cfg)
            coverage, length = score_intervals(dist, rep.truth, cfg.level)
        except KrigingError as e:
            logger.warning(f"Replicate {index}, {method.value} failed: {e}")
            outcome.failures.append(ReplicateFailure(index=index, method=method, reason=str(e)))
            continue
        outcome.records.append(
            ReplicateRecord(index=index, method=method, coverage=coverage, mean_length=length)
        )
    return outcome


def summarise(
    method: Method, records: List[ReplicateRecord], failures: List[ReplicateFailure]
) -> MethodSummary:
    mine = [rec for rec in records if rec.method == method]
    failed = sum(1 for f in failures if f.method in (None, method))
    if not mine:
        return MethodSummary(
            method=method,
            coverage=math.nan,
            coverage_se=math.nan,
            mean_length=math.nan,
            length_se=math.nan,
            n_designs=0,
            n_failed=failed,
        )
    cov = np.array([rec.coverage for rec in mine])
    lengths = np.array([rec.mean_length for rec in mine])
    k = len(mine)
    c = float(cov.mean())
    return MethodSummary(
        method=method,
        coverage=c,
        coverage_se=math.sqrt(c * (1.0 - c) / k),
        mean_length=float(lengths.mean()),
        length_se=float(lengths.std(ddof=1) / math.sqrt(k)) if k > 1 else math.nan,
        n_designs=k,
        n_failed=failed,
    )


def check_model(cfg: ExperimentConfig) -> None:
    """
    Run the existence checklist on the first replicate.

    Raises:
        ExistenceViolationError: if existence is not guaranteed and `force` is off.
    """
    rep = draw_replicate(cfg, 0)
    report = check_existence(model_context(cfg, rep.design), rep.y, seed=cfg.seed)
    if report.guaranteed:
        return
    if cfg.force:
        logger.warning(f"Existence not guaranteed, continuing because force is set: {report.notes}")
        return
    raise ExistenceViolationError(
        "the Gibbs reference posterior is not guaranteed to exist for this model: "
        + "; ".join(report.notes)
    )


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> BenchResult:
    """
    Estimate average coverage and average mean length for every configured method.

    Replicates failing with a `KrigingError` are logged, excluded and counted.
    """
    if Method.FPD in cfg.methods:
        check_model(cfg)
    workers = threads or settings.threads or os.cpu_count() or 1
    workers = max(1, min(workers, cfg.n_designs))
    logger.info(
        f"Experiment: {cfg.n_designs} designs x {cfg.n_tests} tests, n={cfg.n}, r={cfg.r}, "
        f"basis={cfg.basis.value}, methods={[m.value for m in cfg.methods]}, {workers} thread(s)"
    )
    start = time.perf_counter()
    if workers == 1:
        outcomes = [run_replicate(cfg, i) for i in range(cfg.n_designs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda i: run_replicate(cfg, i), range(cfg.n_designs)))
    outcomes.sort(key=lambda o: o.index)

    records = [rec for o in outcomes for rec in o.records]
    failures = [f for o in outcomes for f in o.failures]
    if failures:
        logger.warning(f"{len(failures)} replicate failure(s) excluded from the averages")
    summaries = [summarise(m, records, failures) for m in cfg.methods]
    elapsed = time.perf_counter() - start
    for s in summaries:
        logger.success(
            f"{s.method.value}: coverage {s.coverage:.3f} (se {s.coverage_se:.3f}), "
            f"mean length {s.mean_length:.3f} (se {s.length_se:.3f}) over {s.n_designs} designs"
        )
    return BenchResult(
        config=cfg,
        summaries=summaries,
        records=records,
        failures=failures,
        elapsed_seconds=elapsed,
    )


def level_sweep(cfg: ExperimentConfig, levels: List[float]) -> Dict[float, BenchResult]:
    """Same replicates scored at several levels; useful for calibration checks."""
    return {level: run_experiment(cfg.model_copy(update={"level": level})) for level in levels}
