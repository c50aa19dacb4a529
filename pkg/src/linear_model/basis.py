import numpy as np
from loguru import logger
from scipy import linalg

from src.errors import IdentifiabilityError
from src.models.basis import ModelMatrices, TrendBasis
from src.models.design import DesignSet
from src.models.enums import BasisKind

RANK_RTOL = 1e-10


def build_basis_matrix(basis: TrendBasis, design: DesignSet, check_rank: bool = True) -> np.ndarray:
    """
    Evaluate the trend basis on the design, one column per function.

    Raises:
        IdentifiabilityError: if n <= p or H is numerically rank deficient.
    """
    pts = design.points
    if basis.kind == BasisKind.NONE:
        H = np.zeros((design.n, 0))
    elif basis.kind == BasisKind.CONSTANT:
        H = np.ones((design.n, 1))
    elif basis.kind == BasisKind.AFFINE:
        H = np.hstack([np.ones((design.n, 1)), pts])
    else:
        H = np.array([[f(x) for f in basis.functions or []] for x in pts], dtype=float)

    if not check_rank:
        return H
    p = H.shape[1]
    if design.n <= p:
        raise IdentifiabilityError(f"need more observations than basis functions (n={design.n}, p={p})")
    if p > 0:
        sv = np.linalg.svd(H, compute_uv=False)
        if sv[-1] <= RANK_RTOL * sv[0]:
            raise IdentifiabilityError(
                f"basis matrix is rank deficient (singular values {sv.min():.3e} / {sv.max():.3e})"
            )
    return H


def orthonormal_split(H: np.ndarray) -> ModelMatrices:
    """
    Orthonormal bases P of span(H) and W of its complement from one full QR.

    PP' + WW' = I holds by construction.
    """
    n, p = H.shape
    if p == 0:
        return ModelMatrices(H=H, P=np.zeros((n, 0)), W=np.eye(n))
    if n <= p:
        raise IdentifiabilityError(f"need n > p, got n={n}, p={p}")
    Q, R = linalg.qr(H, mode="full")
    diag = np.abs(np.diag(R[:p, :p]))
    if diag.min() <= RANK_RTOL * diag.max():
        raise IdentifiabilityError("basis matrix is rank deficient")
    logger.debug(f"Orthonormal split: n={n}, p={p}")
    return ModelMatrices(H=H, P=Q[:, :p], W=Q[:, p:])
