from typing import Tuple

import numpy as np
from loguru import logger
from scipy import linalg

from src.config.settings import settings
from src.errors import FactorizationError


def condition_estimate(lower: np.ndarray) -> np.ndarray:
    """Lower bound of cond(A) read off the Cholesky diagonal, (max l_ii / min l_ii)^2."""
    diag = np.abs(np.diagonal(lower, axis1=-2, axis2=-1))
    return (diag.max(axis=-1) / diag.min(axis=-1)) ** 2


def cholesky(matrix: np.ndarray, what: str = "matrix") -> np.ndarray:
    """
    Lower Cholesky factor of a symmetric positive definite matrix.

    Adds the configured diagonal jitter first (zero unless opted in) and logs a
    warning when the condition estimate exceeds the configured threshold.

    Raises:
        FactorizationError: if the matrix is not numerically positive definite.
    """
    if matrix.shape[0] == 0:
        return np.zeros((0, 0))
    if settings.cholesky_jitter > 0:
        matrix = matrix + settings.cholesky_jitter * np.eye(matrix.shape[0])
    try:
        lower = np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as e:
        raise FactorizationError(f"Cholesky factorization of the {what} failed") from e
    cond = float(condition_estimate(lower))
    if not np.isfinite(cond) or cond > settings.condition_warning:
        logger.warning(f"Ill-conditioned {what}: condition estimate {cond:.3e}")
    return lower


def cholesky_batch(stack: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cholesky factors of a (G, m, m) stack.

    Members that fail are replaced by the identity and flagged False in the
    returned mask instead of aborting the whole batch.
    """
    if settings.cholesky_jitter > 0:
        stack = stack + settings.cholesky_jitter * np.eye(stack.shape[-1])
    valid = np.ones(stack.shape[0], dtype=bool)
    try:
        lower = np.linalg.cholesky(stack)
    except np.linalg.LinAlgError:
        lower = np.empty_like(stack)
        for g, member in enumerate(stack):
            try:
                lower[g] = np.linalg.cholesky(member)
            except np.linalg.LinAlgError:
                lower[g] = np.eye(stack.shape[-1])
                valid[g] = False
    bad = ~np.isfinite(lower).all(axis=(-2, -1))
    if bad.any():
        lower[bad] = np.eye(stack.shape[-1])
        valid &= ~bad
    if stack.shape[-1] > 0 and valid.any():
        cond = condition_estimate(lower)
        ill = valid & (cond > settings.condition_warning)
        if ill.any():
            logger.debug(f"{int(ill.sum())} batch members above the condition threshold")
    return lower, valid


def log_det_from_cholesky(lower: np.ndarray) -> np.ndarray:
    return 2.0 * np.sum(np.log(np.diagonal(lower, axis1=-2, axis2=-1)), axis=-1)


def solve_lower(lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return linalg.solve_triangular(lower, rhs, lower=True)


def cho_solve(lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return linalg.cho_solve((lower, True), rhs)


def whiten_congruence(lower: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """L^-1 M L^-T for symmetric M, batched over leading axes."""
    left = np.linalg.solve(lower, matrix)
    return np.linalg.solve(lower, np.swapaxes(left, -1, -2))


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + np.swapaxes(matrix, -1, -2))
