"""Ground-truth references: dense LU solves, residuals, small spectra.

Every solver-accuracy claim in the test suite bottoms out here: a dense
LU factorization of the assembled system, the exact sparse residual, and
dense eigenvalues for certifying (in)definiteness of small operators.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .problems import BlockTridiagSystem, assemble_full

__all__ = ["dense_lu_solve", "relative_residual", "spectrum_small"]


def dense_lu_solve(A: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Solve A u = f by dense LU with partial pivoting."""
    A = np.asarray(A, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if f.shape[0] != A.shape[0]:
        raise ValueError("right-hand side length mismatch")
    lu, piv = scipy.linalg.lu_factor(A)
    if np.any(np.abs(np.diag(lu)) == 0.0):
        raise np.linalg.LinAlgError("matrix is singular to working precision")
    return scipy.linalg.lu_solve((lu, piv), f)


def relative_residual(sys: BlockTridiagSystem, u: np.ndarray) -> float:
    """||A u - f||_2 / ||f||_2 using the exact sparse operator.

    Falls back to the absolute residual (with a warning) when f = 0.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape[0] != sys.n_unknowns:
        raise ValueError(f"solution length {u.shape[0]} != {sys.n_unknowns}")
    A = assemble_full(sys).tocsr()
    r = np.linalg.norm(A @ u - sys.rhs)
    fn = np.linalg.norm(sys.rhs)
    if fn == 0.0:
        warnings.warn("zero right-hand side: reporting absolute residual",
                      stacklevel=2)
        return float(r)
    return float(r / fn)


def spectrum_small(A: np.ndarray) -> np.ndarray:
    """All eigenvalues of a small symmetric matrix, ascending."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise ValueError("spectrum_small requires a symmetric matrix")
    return np.linalg.eigvalsh(A)
