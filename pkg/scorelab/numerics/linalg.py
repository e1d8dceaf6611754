"""
Small dense linear algebra on symmetric positive definite matrices.
"""

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.linalg.lapack import dpotrf

from scorelab.errors import NotPositiveDefiniteError, SpecificationError

SYMMETRY_RTOL = 1e-10


def as_matrix(rows: int, cols: int, entries) -> np.ndarray:
    """Row-major entries to a (rows, cols) array."""
    values = np.asarray(entries, dtype=float).ravel()
    if values.size != int(rows) * int(cols):
        raise SpecificationError(f"Matrix needs {rows}x{cols}={rows * cols} entries, got {values.size}")
    return values.reshape(int(rows), int(cols))


def require_symmetric(A, name: str = "matrix", rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise SpecificationError(f"{name} must be square, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > rtol * scale:
        raise SpecificationError(f"{name} is not symmetric within relative tolerance {rtol}")
    return A


def cholesky_upper(A) -> np.ndarray:
    """Upper factor U with A = U'U; non-positive pivot raises with its index."""
    A = require_symmetric(A)
    U, info = dpotrf(A, lower=0, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(pivot=int(info) - 1)
    if info < 0:
        raise SpecificationError(f"LAPACK potrf rejected argument {-info}")
    return np.triu(U)


def solve_spd(A, b) -> np.ndarray:
    U = cholesky_upper(A)
    b = np.asarray(b, dtype=float)
    return cho_solve((U, False), b)


def spd_inverse(A) -> np.ndarray:
    U = cholesky_upper(A)
    inv = cho_solve((U, False), np.eye(U.shape[0]))
    return 0.5 * (inv + inv.T)


def whiten_solve(U: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Solve U x = E for upper-triangular U (columns of E are right-hand sides)."""
    return solve_triangular(U, E, lower=False)
