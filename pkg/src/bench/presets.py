"""Ready-made experiment tables: one preset is a list of labelled experiment rows."""

from typing import Callable, Dict, List, Tuple

from pydantic import BaseModel

from src.models.enums import BasisKind, BenchFunction, BenchScale, GeneratorKernel, Method
from src.models.experiment import (
    AffineMean,
    DeterministicGenerator,
    ExperimentConfig,
    GaussianProcessGenerator,
)

LENGTH_ROWS: List[Tuple[float, float, float]] = [
    (0.4, 0.8, 0.2),
    (0.5, 0.5, 0.5),
    (0.7, 1.3, 0.4),
    (0.8, 0.3, 0.6),
    (0.8, 1.0, 0.9),
]

CONSTANT_MEAN = AffineMean(intercept=5.0)
AFFINE_MEAN = AffineMean(intercept=5.0, slopes=[4.0, 3.0, 2.0])
NULL_MEAN = AffineMean()

MODEL_LABELS = {
    BasisKind.NONE: "Simple Kriging",
    BasisKind.CONSTANT: "Ordinary Kriging",
    BasisKind.AFFINE: "Affine Kriging",
}

PLUG_IN_AND_FULL = [Method.MLE, Method.MAP, Method.FPD]

# (designs, tests, chain sweeps, burn-in)
SCALES: Dict[BenchScale, Tuple[int, int, int, int]] = {
    BenchScale.DESK: (50, 200, 3000, 500),
    BenchScale.FULL: (500, 1000, 6000, 1000),
}


class BenchPreset(BaseModel):
    name: str
    title: str
    rows: List[Tuple[str, ExperimentConfig]]


def _config(scale: BenchScale, **fields) -> ExperimentConfig:
    designs, tests, sweeps, burn_in = SCALES[scale]
    base = dict(n_designs=designs, n_tests=tests, chain_iter=sweeps, chain_burn_in=burn_in)
    base.update(fields)
    return ExperimentConfig(**base)


def _label(theta: Tuple[float, ...]) -> str:
    return " - ".join(f"{t:g}" for t in theta)


def _length_table(
    scale: BenchScale, mean: AffineMean, basis: BasisKind, seed: int
) -> List[Tuple[str, ExperimentConfig]]:
    return [
        (
            _label(theta),
            _config(
                scale,
                generator=GaussianProcessGenerator(mean=mean, theta=list(theta)),
                basis=basis,
                seed=seed,
            ),
        )
        for theta in LENGTH_ROWS
    ]


def ordinary(scale: BenchScale = BenchScale.DESK, seed: int = 0) -> BenchPreset:
    return BenchPreset(
        name="ordinary",
        title="Constant mean 5, Ordinary Kriging, Matérn 5/2",
        rows=_length_table(scale, CONSTANT_MEAN, BasisKind.CONSTANT, seed),
    )


def affine(scale: BenchScale = BenchScale.DESK, seed: int = 0) -> BenchPreset:
    return BenchPreset(
        name="affine",
        title="Mean 5 + 4x1 + 3x2 + 2x3, Affine Kriging, Matérn 5/2",
        rows=_length_table(scale, AFFINE_MEAN, BasisKind.AFFINE, seed),
    )


def simple(scale: BenchScale = BenchScale.DESK, seed: int = 0) -> BenchPreset:
    return BenchPreset(
        name="simple",
        title="Null mean, Simple Kriging, Matérn 5/2",
        rows=_length_table(scale, NULL_MEAN, BasisKind.NONE, seed),
    )


def simple_misspecified(scale: BenchScale = BenchScale.DESK, seed: int = 0) -> BenchPreset:
    return BenchPreset(
        name="simple-misspecified",
        title="Mean 5 + 4x1 + 3x2 + 2x3, Simple Kriging assuming a null mean",
        rows=_length_table(scale, AFFINE_MEAN, BasisKind.NONE, seed),
    )


def _model_table(make: Callable[[BasisKind], ExperimentConfig]) -> List[Tuple[str, ExperimentConfig]]:
    return [(MODEL_LABELS[kind], make(kind)) for kind in MODEL_LABELS]


def squared_exponential(scale: BenchScale = BenchScale.DESK, seed: int = 0) -> BenchPreset:
    gen = GaussianProcessGenerator(
        mean=AFFINE_MEAN, theta=list(LENGTH_ROWS[0]), kernel=GeneratorKernel.SQUARED_EXPONENTIAL
    )
    return BenchPreset(
        name="squared-exponential",
        title="Squared-exponential process, models assuming Matérn 5/2",
        rows=_model_table(
            lambda kind: _config(
                scale, generator=gen, basis=kind, methods=PLUG_IN_AND_FULL, seed=seed
            ),
        ),
    )


def matern_models(scale: BenchScale = BenchScale.DESK, seed: int = 0) -> BenchPreset:
    gen = GaussianProcessGenerator(mean=AFFINE_MEAN, theta=list(LENGTH_ROWS[0]))
    return BenchPreset(
        name="matern-models",
        title="Matérn 5/2 process with affine mean across trend models",
        rows=_model_table(
            lambda kind: _config(
                scale, generator=gen, basis=kind, methods=PLUG_IN_AND_FULL, seed=seed
            ),
        ),
    )


def _emulation(
    name: str, title: str, gen: DeterministicGenerator, scale: BenchScale, seed: int
) -> BenchPreset:
    return BenchPreset(
        name=name,
        title=title,
        rows=_model_table(
            lambda kind: _config(
                scale,
                r=7,
                n=100,
                generator=gen,
                basis=kind,
                methods=PLUG_IN_AND_FULL,
                seed=seed,
            ),
        ),
    )


def ackley_emulation(scale: BenchScale = BenchScale.DESK, seed: int = 0) -> BenchPreset:
    gen = DeterministicGenerator(function=BenchFunction.ACKLEY)
    return _emulation("ackley", "Emulated function: Ackley", gen, scale, seed)


def rastrigin_emulation(
    scale: BenchScale = BenchScale.DESK, seed: int = 0, slope: float = 0.0
) -> BenchPreset:
    gen = DeterministicGenerator(function=BenchFunction.RASTRIGIN, linear_slope=slope)
    name = "rastrigin" if not slope else f"rastrigin-{slope:g}"
    title = "Emulated function: Rastrigin" + (f" + {slope:g} sum(x)" if slope else "")
    return _emulation(name, title, gen, scale, seed)


PRESETS: Dict[str, Callable[..., BenchPreset]] = {
    "ordinary": ordinary,
    "affine": affine,
    "simple": simple,
    "simple-misspecified": simple_misspecified,
    "squared-exponential": squared_exponential,
    "matern-models": matern_models,
    "ackley": ackley_emulation,
    "rastrigin": rastrigin_emulation,
    "rastrigin-100": lambda scale=BenchScale.DESK, seed=0: rastrigin_emulation(scale, seed, 100.0),
    "rastrigin-120": lambda scale=BenchScale.DESK, seed=0: rastrigin_emulation(scale, seed, 120.0),
}


def get_preset(name: str, scale: BenchScale = BenchScale.DESK, seed: int = 0) -> BenchPreset:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset '{name}', choose from {sorted(PRESETS)}") from None
    return factory(scale=scale, seed=seed)
