from typing import Callable, Tuple

import numpy as np
import pytest

from src.bench.simulation import sample_gp
from src.linear_model.context import KrigingContext
from src.models.basis import TrendBasis
from src.models.design import DesignSet, LengthVector
from src.models.enums import BasisKind, KernelFamily
from src.models.kernel import KernelSpec

ContextFactory = Callable[..., KrigingContext]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def make_context() -> ContextFactory:
    def factory(
        points,
        nu: float = 2.5,
        basis: BasisKind = BasisKind.CONSTANT,
        family: KernelFamily = KernelFamily.ANISOTROPIC_GEOMETRIC,
    ) -> KrigingContext:
        design = DesignSet(points=points)
        return KrigingContext(design, KernelSpec(family=family, nu=nu, dim=design.r), TrendBasis(kind=basis))

    return factory


@pytest.fixture
def line_design() -> DesignSet:
    return DesignSet(points=[[0.1], [0.35], [0.6], [0.9]])


@pytest.fixture
def line_data(make_context) -> Tuple[KrigingContext, np.ndarray]:
    """Eight points on a line with one draw of a Matérn 5/2 process, constant mean 5."""
    points = np.array([0.03, 0.17, 0.29, 0.41, 0.55, 0.68, 0.82, 0.96]).reshape(-1, 1)
    y = sample_gp(points, np.full(8, 5.0), 1.0, LengthVector(theta=[0.3]), rng=3)
    return make_context(points), y


@pytest.fixture
def plane_data(make_context) -> Tuple[KrigingContext, np.ndarray]:
    """Twelve random points of the unit square with a Matérn 5/2 draw."""
    points = np.random.default_rng(21).random((12, 2))
    y = sample_gp(points, np.full(12, 5.0), 1.0, LengthVector(theta=[0.4, 0.6]), rng=4)
    return make_context(points), y


@pytest.fixture
def cube_data(make_context) -> Tuple[KrigingContext, np.ndarray]:
    """Sixteen random points of the unit cube with a Matérn 5/2 draw."""
    points = np.random.default_rng(31).random((16, 3))
    y = sample_gp(points, np.full(16, 5.0), 1.0, LengthVector(theta=[0.4, 0.5, 0.7]), rng=6)
    return make_context(points), y
