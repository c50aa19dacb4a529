"""Deterministic functions on (0, 1)^7 emulated by the benchmark."""

import numpy as np

from src.errors import KernelDomainError

DIMENSION = 7


def _points(x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != DIMENSION:
        raise KernelDomainError(
            f"test functions are defined in dimension {DIMENSION}, got {arr.shape[-1]}"
        )
    return arr


def ackley(x: np.ndarray) -> np.ndarray | float:
    """Ackley function; vectorised over leading axes, minimum 0 at the origin."""
    x = _points(x)
    radius = np.sqrt(np.sum(x**2, axis=-1) / DIMENSION)
    waves = np.sum(np.cos(2 * np.pi * x), axis=-1) / DIMENSION
    value = 20.0 + np.e - 20.0 * np.exp(-0.2 * radius) - np.exp(waves)
    return float(value) if np.ndim(value) == 0 else value


def rastrigin(x: np.ndarray, linear_slope: float = 0.0) -> np.ndarray | float:
    """Rastrigin function plus an optional linear trend slope * sum(x)."""
    if linear_slope < 0:
        raise KernelDomainError(f"linear slope must be nonnegative, got {linear_slope}")
    x = _points(x)
    value = 10.0 * DIMENSION + np.sum(x**2 - 10.0 * np.cos(2 * np.pi * x), axis=-1)
    if linear_slope:
        value = value + linear_slope * np.sum(x, axis=-1)
    return float(value) if np.ndim(value) == 0 else value
