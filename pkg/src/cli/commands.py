"""
Subcommands behind `main.py`: check, sample, predict and bench.

Every command returns a process exit code: 0 on success, 1 for configuration,
data or numerical errors, 2 when the Gibbs reference posterior is not
guaranteed to exist and --force was not given.
"""

import time
from functools import wraps
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from src import __version__
from src.bench.experiment import run_experiment
from src.bench.presets import get_preset
from src.bench.tables import coverage_table, render_text
from src.config.run_config import RunConfig, load_run_config
from src.errors import ConfigError, DataFileError, ExistenceViolationError, KrigingError
from src.estimation.optimizer import map_estimate, mle
from src.existence.checklist import check_existence
from src.linear_model.context import KrigingContext
from src.models.basis import TrendBasis
from src.models.chain import ChainConfig, ChainOutput
from src.models.design import DesignSet, LengthVector
from src.models.enums import BenchScale, GeneratorKernel
from src.models.existence import ExistenceReport
from src.models.experiment import BenchResult, GaussianProcessGenerator
from src.models.kernel import KernelSpec
from src.models.manifest import RunManifest
from src.prediction.intervals import Predictive
from src.prediction.predictive import predict_full_bayes, predict_student
from src.sampling.gibbs_sampler import GibbsSampler
from src.storage.files import (
    read_observations,
    read_targets,
    write_bench,
    write_chain,
    write_diagnostics,
    write_manifest,
    write_predictions,
    write_text,
)
from src.utils.misc_utils import config_digest

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_GUARANTEED = 2

console = Console()


class Overrides(BaseModel):
    """Command-line flags that take precedence over the config file."""

    data: Optional[Path] = None
    targets: Optional[Path] = None
    output: Optional[Path] = None
    seed: Optional[int] = None
    iters: Optional[int] = None
    burn_in: Optional[int] = None
    thin: Optional[int] = None
    force: bool = False
    method: Optional[str] = None
    level: Optional[float] = None
    preset: Optional[str] = None
    scale: Optional[BenchScale] = None
    methods: Optional[str] = None
    threads: Optional[int] = None


def apply_overrides(cfg: RunConfig, flags: Overrides) -> RunConfig:
    """Merged config, re-validated so that flags obey the same rules as the file."""
    raw = cfg.model_dump(mode="json")
    updates: Dict[Tuple[str, str], object] = {
        ("data", "observations"): flags.data,
        ("data", "targets"): flags.targets,
        ("output", "directory"): flags.output,
        ("sampler", "seed"): flags.seed,
        ("sampler", "iters"): flags.iters,
        ("sampler", "burn_in"): flags.burn_in,
        ("sampler", "thin"): flags.thin,
        ("prediction", "method"): flags.method,
        ("prediction", "level"): flags.level,
        ("bench", "preset"): flags.preset,
        ("bench", "scale"): flags.scale.value if flags.scale else None,
        ("bench", "methods"): flags.methods,
        ("bench", "threads"): flags.threads,
    }
    if flags.seed is not None:
        updates[("bench", "seed")] = flags.seed
        updates[("estimation", "seed")] = flags.seed
    for (section, key), value in updates.items():
        if value is not None:
            raw[section][key] = str(value) if isinstance(value, Path) else value
    try:
        return RunConfig.model_validate(raw)
    except ValueError as e:
        raise ConfigError(f"invalid command-line override: {e}") from e


def guarded(command: Callable[..., int]) -> Callable[..., int]:
    """Map library errors to exit codes and print them instead of a traceback."""

    @wraps(command)
    def wrapper(*args, **kwargs) -> int:
        try:
            return command(*args, **kwargs)
        except (ConfigError, DataFileError) as e:
            logger.error(str(e))
            console.print(Panel(str(e), title="Input error", border_style="red"))
            return EXIT_ERROR
        except KrigingError as e:
            logger.error(f"{type(e).__name__}: {e}")
            console.print(Panel(str(e), title=type(e).__name__, border_style="red"))
            return EXIT_ERROR

    return wrapper


def kernel_spec(cfg: RunConfig, r: int) -> KernelSpec:
    return KernelSpec(family=cfg.model.family, nu=cfg.model.nu, dim=r)


def observations(cfg: RunConfig) -> Tuple[DesignSet, Optional[np.ndarray]]:
    """Observed design and responses, or a seeded uniform design when no data file is set."""
    if cfg.data.observations is not None:
        design, y = read_observations(cfg.data.observations, cfg.model.dim)
        return design, y
    if cfg.model.dim is None or cfg.model.n is None:
        raise ConfigError("[model] needs dim and n when [data] observations is not set")
    rng = np.random.default_rng(cfg.data.design_seed)
    return DesignSet(points=rng.random((cfg.model.n, cfg.model.dim))), None


def build_context(cfg: RunConfig, design: DesignSet) -> KrigingContext:
    return KrigingContext(design, kernel_spec(cfg, design.r), TrendBasis(kind=cfg.model.basis))


def require_data(y: Optional[np.ndarray]) -> np.ndarray:
    if y is None:
        raise ConfigError("[data] observations is required for this command")
    return y


def chain_config(cfg: RunConfig) -> ChainConfig:
    s = cfg.sampler
    fields = dict(n_iter=s.iters, burn_in=s.burn_in, thin=s.thin, seed=s.seed)
    if s.grid_size is not None:
        fields["grid_size"] = s.grid_size
    return ChainConfig(**fields)


def show_report(report: ExistenceReport) -> None:
    style = "green" if report.guaranteed else "yellow"
    lines = [f"[bold]{report.verdict.value}[/]"]
    if report.matched_rule is not None:
        lines.append(f"rule: {report.matched_rule.value}")
    lines.append(f"assumption 1: {report.assumption1.value}")
    lines.append(f"assumption 2 proxy: {report.assumption2_proxy.value}")
    lines.extend(f"- {note}" for note in report.notes)
    console.print(Panel("\n".join(lines), title="Existence check", border_style=style))


def gate(
    context: KrigingContext, y: Optional[np.ndarray], force: bool, seed: int
) -> Tuple[ExistenceReport, bool]:
    """Run the checklist; the flag says whether the command may proceed."""
    report = check_existence(context, y, seed=seed)
    show_report(report)
    if report.guaranteed:
        return report, True
    if force:
        logger.warning("Existence not guaranteed; continuing because --force was given")
        return report, True
    logger.warning("Existence not guaranteed; refusing to run without --force")
    return report, False


def new_manifest(command: str, cfg: RunConfig) -> RunManifest:
    echo = cfg.model_dump(mode="json")
    return RunManifest(
        command=command, version=__version__, config=echo, config_digest=config_digest(echo)
    )


def finish_manifest(manifest: RunManifest, started: float, directory: Path) -> None:
    manifest.wall_seconds = time.perf_counter() - started
    path = directory / f"{manifest.command}_manifest.json"
    manifest.outputs.append(str(path))
    write_manifest(manifest, path)


@guarded
def cmd_check(config_path: Path, flags: Optional[Overrides] = None) -> int:
    """Existence checklist for the configured model and design."""
    flags = flags or Overrides()
    cfg = apply_overrides(load_run_config(config_path), flags)
    design, y = observations(cfg)
    context = build_context(cfg, design)
    report = check_existence(context, y, seed=cfg.sampler.seed)
    show_report(report)
    return EXIT_OK if report.guaranteed else EXIT_NOT_GUARANTEED


def _run_chain(
    cfg: RunConfig, context: KrigingContext, y: np.ndarray, manifest: RunManifest
) -> ChainOutput:
    chain_cfg = chain_config(cfg)
    manifest.seeds["chain"] = chain_cfg.seed
    t0 = time.perf_counter()
    chain = GibbsSampler(context, y, chain_cfg).run()
    manifest.timings["sampling"] = time.perf_counter() - t0
    return chain


@guarded
def cmd_sample(config_path: Path, flags: Optional[Overrides] = None) -> int:
    """Run the Gibbs sampler; writes chain.csv, diagnostics.json and a manifest."""
    started = time.perf_counter()
    flags = flags or Overrides()
    cfg = apply_overrides(load_run_config(config_path), flags)
    manifest = new_manifest("sample", cfg)
    design, y = observations(cfg)
    y = require_data(y)
    context = build_context(cfg, design)

    t0 = time.perf_counter()
    report, proceed = gate(context, y, flags.force, cfg.sampler.seed)
    manifest.timings["existence"] = time.perf_counter() - t0
    manifest.existence = report
    if not proceed:
        return EXIT_NOT_GUARANTEED

    chain = _run_chain(cfg, context, y, manifest)
    out = cfg.output.directory
    manifest.outputs.append(str(write_chain(chain, out / "chain.csv")))
    manifest.outputs.append(str(write_diagnostics(chain, out / "diagnostics.json")))
    finish_manifest(manifest, started, out)

    table = Table(title="Gibbs reference posterior")
    table.add_column("coordinate")
    table.add_column("mean", justify="right")
    table.add_column("5%", justify="right")
    table.add_column("95%", justify="right")
    table.add_column("ESS", justify="right")
    table.add_column("split R-hat", justify="right")
    for j in range(context.r):
        col = chain.theta[:, j]
        table.add_row(
            f"theta{j + 1}",
            f"{col.mean():.4g}",
            f"{np.quantile(col, 0.05):.4g}",
            f"{np.quantile(col, 0.95):.4g}",
            f"{chain.diagnostics.ess[j]:.0f}",
            f"{chain.diagnostics.split_rhat[j]:.3f}",
        )
    console.print(table)
    return EXIT_OK


def parse_fixed_theta(method: str, r: int) -> LengthVector:
    values = method.split(":", 1)[1]
    try:
        theta = [float(v) for v in values.split(",")]
    except ValueError as e:
        raise ConfigError(f"cannot read correlation lengths from '{method}'") from e
    if len(theta) != r:
        raise ConfigError(f"'{method}' gives {len(theta)} correlation lengths for r={r}")
    try:
        return LengthVector(theta=theta)
    except ValueError as e:
        raise ConfigError(f"invalid correlation lengths in '{method}': {e}") from e


@guarded
def cmd_predict(config_path: Path, flags: Optional[Overrides] = None) -> int:
    """Predictive intervals at the targets with the method mle, map, fpd or fixed:θ."""
    started = time.perf_counter()
    flags = flags or Overrides()
    cfg = apply_overrides(load_run_config(config_path), flags)
    manifest = new_manifest("predict", cfg)
    design, y = observations(cfg)
    y = require_data(y)
    if cfg.data.targets is None:
        raise ConfigError("[data] targets is required for predict")
    targets = read_targets(cfg.data.targets, design.r)
    context = build_context(cfg, design)
    method = cfg.prediction.method
    est = cfg.estimation

    t0 = time.perf_counter()
    dist: Predictive
    seed: Optional[int] = None
    if method.startswith("fixed:"):
        dist = predict_student(
            targets, y, parse_fixed_theta(method, design.r), context, marginal=True
        )
    elif method in ("mle", "map"):
        estimator = mle if method == "mle" else map_estimate
        seed = est.seed
        manifest.seeds["estimation"] = seed
        fit = estimator(y, context, box=(est.box_min, est.box_max), restarts=est.restarts, seed=seed)
        if not fit.converged:
            logger.warning(f"{method.upper()} estimate {fit.theta.theta} is not converged")
        manifest.notes.append(f"{method} theta = {fit.theta.theta.tolist()}")
        dist = predict_student(targets, y, fit.theta, context, marginal=True)
    else:
        report, proceed = gate(context, y, flags.force, cfg.sampler.seed)
        manifest.existence = report
        if not proceed:
            return EXIT_NOT_GUARANTEED
        chain = _run_chain(cfg, context, y, manifest)
        seed = chain.config.seed
        dist = predict_full_bayes(
            targets, y, chain, context, marginal=True, max_components=cfg.prediction.max_components
        )
    manifest.timings["prediction"] = time.perf_counter() - t0

    out = cfg.output.directory
    path = write_predictions(targets, dist, cfg.prediction.level, method, out / "predictions.csv", seed)
    manifest.outputs.append(str(path))
    finish_manifest(manifest, started, out)
    console.print(
        Panel(
            f"{targets.n} targets, method {method}, level {cfg.prediction.level}\n→ {path}",
            title="Prediction",
            border_style="green",
        )
    )
    return EXIT_OK


@guarded
def cmd_bench(config_path: Path, flags: Optional[Overrides] = None) -> int:
    """Run every row of a preset; writes bench.csv, bench.txt and a manifest."""
    started = time.perf_counter()
    flags = flags or Overrides()
    cfg = apply_overrides(load_run_config(config_path), flags)
    manifest = new_manifest("bench", cfg)
    b = cfg.bench
    try:
        preset = get_preset(b.preset, b.scale, b.seed)
    except KeyError as e:
        raise ConfigError(str(e.args[0])) from e
    manifest.seeds["bench"] = b.seed

    rows: List[Tuple[str, BenchResult]] = []
    for label, exp in preset.rows:
        update: Dict[str, object] = {"force": flags.force}
        if b.methods is not None:
            update["methods"] = b.methods
        if b.n_designs is not None:
            update["n_designs"] = b.n_designs
        if b.n_tests is not None:
            update["n_tests"] = b.n_tests
        try:
            exp = type(exp).model_validate({**exp.model_dump(), **update})
        except ValueError as e:
            raise ConfigError(f"[bench] settings rejected for row '{label}': {e}") from e
        gen = exp.generator
        if isinstance(gen, GaussianProcessGenerator) and gen.kernel == GeneratorKernel.SQUARED_EXPONENTIAL:
            note = "squared-exponential lengths use exp(-sum (d/θ)^2), the Matérn large-ν limit"
            if note not in manifest.notes:
                manifest.notes.append(note)
        logger.info(f"Preset {preset.name}: row '{label}'")
        t0 = time.perf_counter()
        try:
            result = run_experiment(exp, threads=b.threads)
        except ExistenceViolationError as e:
            logger.warning(str(e))
            console.print(Panel(str(e), title="Existence not guaranteed", border_style="yellow"))
            return EXIT_NOT_GUARANTEED
        rows.append((label, result))
        manifest.timings[label] = time.perf_counter() - t0

    out = cfg.output.directory
    manifest.outputs.append(str(write_bench(rows, out / "bench.csv", b.seed)))
    table = coverage_table(preset.title, rows, with_se=True)
    preset_line = f"preset {preset.name} ({b.scale.value} scale)"
    text_path = write_text(render_text(table), out / "bench.txt", b.seed, [preset_line])
    manifest.outputs.append(str(text_path))
    finish_manifest(manifest, started, out)
    console.print(table)
    return EXIT_OK
