# lrgmp - Dense math substrate
# AGPL-3.0-or-later
#
# Mat is a C-contiguous float64 ndarray; Rng is a numpy Generator on PCG64.
# Everything downstream (messages, prompts, backbone) runs in float64 so the
# equivalence checks can hold to near machine precision.

import numpy as np
from scipy.linalg import svdvals
from scipy.special import softmax

from lrgmp.config import RANK_REL_TOL
from lrgmp.errors import ParameterError, ShapeError

Mat = np.ndarray
Rng = np.random.Generator


def make_rng(seed: "int | np.random.SeedSequence") -> Rng:
    """Seeded PCG64 generator. Same seed gives the same stream on every platform."""
    return np.random.Generator(np.random.PCG64(seed))


def as_mat(a, name: str = "matrix") -> Mat:
    """Coerce to a 2-D float64 C-contiguous array."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def as_vec(a, name: str = "vector") -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def matmul(a: Mat, b: Mat) -> Mat:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return a @ b


def row_softmax(a: Mat, tau: float = 1.0) -> Mat:
    """Softmax of each row of a / tau (max-subtracted)."""
    if not tau > 0:
        raise ParameterError(f"softmax temperature must be > 0, got {tau}")
    return softmax(a / tau, axis=1)


def relu(a: Mat) -> Mat:
    return np.maximum(a, 0.0)


def leaky_relu(a: Mat, slope: float) -> Mat:
    return np.where(a > 0, a, slope * a)


def numerical_rank(a: Mat, rel_tol: float = RANK_REL_TOL) -> int:
    """Count singular values above rel_tol * largest singular value.

    Singular values come from an SVD rather than the Gram matrix: forming
    a^T a squares the condition number and leaves rounding noise near
    sqrt(eps) * sigma_max, which sits above a 1e-8 threshold.
    """
    if a.size == 0:
        raise ShapeError(f"numerical_rank: empty matrix of shape {a.shape}")
    if not 0 < rel_tol < 1:
        raise ParameterError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    s = svdvals(a, check_finite=True)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def randn(rng: Rng, rows: int, cols: int, std: float) -> Mat:
    if std < 0:
        raise ParameterError(f"std must be >= 0, got {std}")
    return std * rng.standard_normal((rows, cols))
