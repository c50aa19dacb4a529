"""Modified Bessel function of the second kind on the log scale, over scipy.special."""

from typing import Union

import numpy as np
from scipy import special

from src.errors import KernelDomainError

ArrayLike = Union[float, np.ndarray]


def log_bessel_k(nu: float, x: ArrayLike) -> ArrayLike:
    """
    log K_nu(x) for nu > 0, x > 0.

    Goes through the exponentially scaled kve, so it stays finite past
    x ~ 705 where kv itself underflows to 0.
    """
    if not np.isfinite(nu) or nu <= 0:
        raise KernelDomainError(f"Bessel order must be positive, got nu={nu}")
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise KernelDomainError("Bessel argument must be positive and finite")
    out = np.log(special.kve(nu, arr)) - arr
    return float(out) if np.ndim(out) == 0 else out
