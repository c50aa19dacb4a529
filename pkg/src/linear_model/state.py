"""Per-θ correlation quantities, computed lazily and cached."""

import threading
from functools import cached_property
from typing import Callable, Dict, Optional

import numpy as np
from loguru import logger

from src.errors import FactorizationError
from src.models.basis import ModelMatrices
from src.models.design import DesignSet, LengthVector
from src.models.kernel import KernelSpec
from src.kernels.correlation import (
    corr_matrix,
    corr_matrix_batch,
    corr_matrix_deriv,
    corr_matrix_deriv_batch,
)
from src.utils.linalg import (
    cho_solve,
    cholesky,
    cholesky_batch,
    log_det_from_cholesky,
    solve_lower,
    whiten_congruence,
)

DerivativeFn = Callable[[int], np.ndarray]


def trace_terms(projected_lower: np.ndarray, projected_deriv: np.ndarray):
    """
    Tr C and Tr C^2 for C = L^-1 B L^-T, batched over leading axes.

    C is similar to (W'ΣW)^-1 W'∂ΣW, so these are the two traces of the
    conditional reference prior.
    """
    C = whiten_congruence(projected_lower, projected_deriv)
    trace = np.trace(C, axis1=-2, axis2=-1)
    trace_sq = np.sum(C * np.swapaxes(C, -1, -2), axis=(-2, -1))
    return trace, trace_sq


class CorrelationState:
    """
    Σ_θ with its factorisation, the factorised projection W'Σ_θW and the
    derivative matrices ∂Σ/∂θ_i, all evaluated on first use.
    """

    def __init__(
        self,
        sigma: np.ndarray,
        matrices: ModelMatrices,
        lengths: Optional[LengthVector] = None,
        derivative: Optional[DerivativeFn] = None,
    ):
        self.sigma = sigma
        self.matrices = matrices
        self.lengths = lengths
        self._derivative_fn = derivative
        self._derivatives: Dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    @classmethod
    def build(
        cls, design: DesignSet, lengths: LengthVector, spec: KernelSpec, matrices: ModelMatrices
    ) -> "CorrelationState":
        sigma = corr_matrix(design, lengths, spec)
        return cls(
            sigma,
            matrices,
            lengths=lengths,
            derivative=lambda i: corr_matrix_deriv(design, lengths, i, spec),
        )

    @property
    def n(self) -> int:
        return self.matrices.n

    @cached_property
    def sigma_factor(self) -> np.ndarray:
        return cholesky(self.sigma, "correlation matrix")

    @cached_property
    def projected(self) -> np.ndarray:
        W = self.matrices.W
        return W.T @ self.sigma @ W

    @cached_property
    def projected_factor(self) -> np.ndarray:
        return cholesky(self.projected, "projected correlation matrix W'ΣW")

    @cached_property
    def log_det_projected(self) -> float:
        return float(log_det_from_cholesky(self.projected_factor))

    def whiten(self, y: np.ndarray) -> np.ndarray:
        """L_A^-1 W'y, whose squared norm is the quadratic form."""
        return solve_lower(self.projected_factor, self.matrices.W.T @ y)

    def projected_solve(self, rhs: np.ndarray) -> np.ndarray:
        """(W'ΣW)^-1 rhs."""
        return cho_solve(self.projected_factor, rhs)

    def quadratic_form(self, y: np.ndarray) -> float:
        z = self.whiten(y)
        return float(z @ z)

    def derivative(self, i: int) -> np.ndarray:
        if self._derivative_fn is None:
            raise FactorizationError("this state carries no derivative matrices")
        with self._lock:
            if i not in self._derivatives:
                self._derivatives[i] = self._derivative_fn(i)
            return self._derivatives[i]

    def projected_derivative(self, i: int) -> np.ndarray:
        W = self.matrices.W
        return W.T @ self.derivative(i) @ W

    @cached_property
    def projector(self) -> np.ndarray:
        """Q_θ = I - H(H'Σ^-1H)^-1 H'Σ^-1."""
        H = self.matrices.H
        n, p = H.shape
        if p == 0:
            return np.eye(n)
        sinv_h = cho_solve(self.sigma_factor, H)
        gram = H.T @ sinv_h
        return np.eye(n) - H @ np.linalg.solve(gram, sinv_h.T)


class CorrelationBatch:
    """
    Stack of correlation states over G values of θ, evaluated with batched
    linear algebra. Members whose projection fails to factorise are masked out.
    """

    def __init__(
        self, design: DesignSet, thetas: np.ndarray, spec: KernelSpec, matrices: ModelMatrices
    ):
        self.design = design
        self.thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        self.spec = spec
        self.matrices = matrices

    @cached_property
    def _factorised(self):
        W = self.matrices.W
        sigma = corr_matrix_batch(self.design, self.thetas, self.spec)
        projected = W.T @ sigma @ W
        lower, valid = cholesky_batch(projected)
        if not valid.all():
            logger.debug(f"{int((~valid).sum())}/{valid.size} grid members not factorisable")
        return lower, valid

    @property
    def projected_factor(self) -> np.ndarray:
        return self._factorised[0]

    @property
    def valid(self) -> np.ndarray:
        return self._factorised[1]

    def log_det_projected(self) -> np.ndarray:
        return log_det_from_cholesky(self.projected_factor)

    def quadratic_form(self, y: np.ndarray) -> np.ndarray:
        wy = self.matrices.W.T @ y
        z = np.linalg.solve(self.projected_factor, np.broadcast_to(wy, self.thetas.shape[:1] + wy.shape)[..., None])
        return np.sum(z[..., 0] ** 2, axis=-1)

    def projected_derivative(self, i: int) -> np.ndarray:
        W = self.matrices.W
        return W.T @ corr_matrix_deriv_batch(self.design, self.thetas, i, self.spec) @ W

    def trace_terms(self, i: int):
        return trace_terms(self.projected_factor, self.projected_derivative(i))

