import threading
from collections import OrderedDict
from functools import cached_property
from typing import Union

import numpy as np

from src.models.basis import ModelMatrices, TrendBasis
from src.models.design import DesignSet, LengthVector
from src.models.kernel import KernelSpec

from .basis import build_basis_matrix, orthonormal_split
from .marginal import batch_integrated_likelihood_L1, integrated_likelihood_L1
from .state import CorrelationBatch, CorrelationState

ThetaLike = Union[LengthVector, np.ndarray, list, tuple]


class KrigingContext:
    """
    A fitted model skeleton: design, kernel and trend basis, with H and its
    orthonormal split built once and a small per-θ cache of correlation states.
    """

    def __init__(
        self,
        design: DesignSet,
        kernel: KernelSpec,
        basis: TrendBasis,
        cache_size: int = 64,
    ):
        self.design = design
        self.kernel = kernel
        self.basis = basis
        self.cache_size = cache_size
        self._states: "OrderedDict[tuple, CorrelationState]" = OrderedDict()
        self._lock = threading.Lock()

    @cached_property
    def H(self) -> np.ndarray:
        return build_basis_matrix(self.basis, self.design)

    @cached_property
    def matrices(self) -> ModelMatrices:
        return orthonormal_split(self.H)

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def p(self) -> int:
        return self.matrices.p

    @property
    def r(self) -> int:
        return self.design.r

    def basis_at(self, targets: DesignSet) -> np.ndarray:
        """H00, the trend basis evaluated at prediction targets."""
        return build_basis_matrix(self.basis, targets, check_rank=False)

    def state(self, theta: ThetaLike) -> CorrelationState:
        lengths = theta if isinstance(theta, LengthVector) else LengthVector(theta=theta)
        key = lengths.key()
        with self._lock:
            cached = self._states.get(key)
            if cached is not None:
                self._states.move_to_end(key)
                return cached
        state = CorrelationState.build(self.design, lengths, self.kernel, self.matrices)
        with self._lock:
            self._states[key] = state
            while len(self._states) > self.cache_size:
                self._states.popitem(last=False)
        return state

    def batch(self, thetas: np.ndarray) -> CorrelationBatch:
        return CorrelationBatch(self.design, thetas, self.kernel, self.matrices)

    def log_integrated_likelihood(self, y: np.ndarray, theta: ThetaLike) -> float:
        return integrated_likelihood_L1(y, self.state(theta))

    def log_integrated_likelihood_batch(self, y: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        return batch_integrated_likelihood_L1(y, self.batch(thetas))
