"""Dense matrix helpers: validated products, Frobenius norm, thin QR with a
fixed sign convention, polar decomposition, and the exponential of a
skew-symmetric matrix.

Everything is plain float64 ndarrays. Shape-changing bugs surface as
:class:`~stiefel_sync.errors.DimensionError` instead of broadcast surprises,
which is why the thin wrappers exist at all.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError, ProjectionError, RankDeficiencyError, ValidationError
from .tolerances import DEFAULT, Tolerances


def require_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a float64 2-D array and reject non-finite entries."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains NaN or Inf entries")
    return a


def require_skew(x, tol: Tolerances = DEFAULT, name: str = "skew matrix") -> np.ndarray:
    """Validate a square skew-symmetric matrix: ||x + x^T|| <= tol * max(1, ||x||)."""
    x = require_matrix(x, name)
    if x.shape[0] != x.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {x.shape}")
    defect = np.linalg.norm(x + x.T)
    if defect > tol.algebraic * max(1.0, np.linalg.norm(x)):
        raise ValidationError(f"{name} is not skew-symmetric (defect {defect:.3e})")
    return x


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return a @ b


def frobenius(a) -> float:
    """Frobenius norm sqrt(tr(a^T a))."""
    return float(np.linalg.norm(np.asarray(a, dtype=float)))


def qr_thin(a, tol: Tolerances = DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR factorization with nonnegative R diagonal.

    The sign convention makes the factorization unique for full-rank input,
    so results are reproducible across runs. Raises
    :class:`RankDeficiencyError` when a diagonal entry of R falls below
    ``tol.rank * ||a||``.
    """
    a = require_matrix(a)
    rows, cols = a.shape
    if rows < cols:
        raise DimensionError(f"qr_thin needs rows >= cols, got {a.shape}")
    q, r = np.linalg.qr(a, mode="reduced")
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    q = q * d
    r = d[:, None] * r
    scale = np.linalg.norm(a)
    if np.any(np.abs(np.diag(r)) <= tol.rank * scale):
        raise RankDeficiencyError(
            f"rank-deficient input: min |R_ii| = {np.min(np.abs(np.diag(r))):.3e}"
        )
    return q, r


def _polar_unchecked(a: np.ndarray) -> np.ndarray:
    """Polar factor without input validation (integration hot path; the
    caller has already established finiteness). A singular Gram matrix
    surfaces as NaNs for the caller's divergence check."""
    gram = np.swapaxes(a, -2, -1) @ a
    w, v = np.linalg.eigh(gram)
    inv_sqrt = (v / np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -2, -1)
    return a @ inv_sqrt


def polar_factor(a, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Orthonormal polar factor U = a (a^T a)^{-1/2}.

    U is the closest matrix with orthonormal columns to ``a`` in the
    Frobenius norm. Accepts a stack shaped (..., n, p); the factorization is
    computed via the symmetric eigendecomposition of a^T a, which is robust
    at the small column counts used here.

    Raises :class:`ProjectionError` when a^T a is numerically singular
    (closest point not unique).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim < 2:
        raise DimensionError(f"polar_factor expects at least 2-D input, got {a.shape}")
    if a.shape[-2] < a.shape[-1]:
        raise DimensionError(f"polar_factor needs rows >= cols, got {a.shape[-2:]}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("polar_factor input contains NaN or Inf entries")
    gram = np.swapaxes(a, -2, -1) @ a
    w, v = np.linalg.eigh(gram)
    # eigenvalues of a^T a are squared singular values of a
    if np.any(w[..., 0] <= (tol.rank ** 2) * np.maximum(w[..., -1], 1e-300)):
        raise ProjectionError("a^T a is numerically singular; projection undefined")
    inv_sqrt = (v / np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -2, -1)
    return a @ inv_sqrt


# order-13 Taylor polynomial is accurate to ~1e-16 once the argument is
# scaled to norm <= 1/2
_TAYLOR_DEGREE = 13


def expm_skew(x, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Matrix exponential of a skew-symmetric matrix.

    Uses scaling-and-squaring with a degree-13 Taylor evaluation of the
    scaled matrix: s = max(0, ceil(log2(||x||)) + 1) halvings bring the norm
    under 1/2. The result is orthogonal with determinant +1.
    """
    x = require_skew(x, tol)
    p = x.shape[0]
    norm = np.linalg.norm(x)
    if norm == 0.0:
        return np.eye(p)
    s = max(0, math.ceil(math.log2(norm)) + 1)
    a = x / (2.0 ** s)
    result = np.eye(p)
    term = np.eye(p)
    for k in range(1, _TAYLOR_DEGREE + 1):
        term = term @ a / k
        result = result + term
    for _ in range(s):
        result = result @ result
    return result
