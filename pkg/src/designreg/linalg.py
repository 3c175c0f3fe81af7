"""Small dense linear-algebra helpers shared by the estimators."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .population import RANK_RTOL


class SingularDesignError(np.linalg.LinAlgError):
    """A regressor or moment matrix is numerically rank deficient.

    ``column`` is the index (in the caller's column order) of the first
    column whose pivot fell below tolerance.
    """

    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column


def lstsq_pivoted(a: np.ndarray, b: np.ndarray, rtol: float = RANK_RTOL, what: str = "design"):
    """Least squares via Householder QR with column pivoting.

    Raises :class:`SingularDesignError` naming the offending column when a
    pivot is below ``rtol`` times the largest one.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q, r, perm = scipy.linalg.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if a.shape[0] < a.shape[1]:
        raise SingularDesignError(f"{what}: fewer rows ({a.shape[0]}) than columns ({a.shape[1]})", None)
    tol = rtol * diag[0] if diag.size else 0.0
    bad = np.flatnonzero(diag <= tol)
    if bad.size:
        col = int(perm[bad[0]])
        raise SingularDesignError(f"{what} is rank deficient at column {col}", col)
    coef_p = scipy.linalg.solve_triangular(r, q.T @ b)
    coef = np.empty_like(coef_p)
    coef[perm] = coef_p
    return coef


def solve_pivoted(a: np.ndarray, b: np.ndarray, rtol: float = RANK_RTOL, what: str = "system"):
    """Solve the square system ``a @ x = b`` through one pivoted QR of ``a``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what}: expected a square matrix, got {a.shape}")
    return lstsq_pivoted(a, b, rtol=rtol, what=what)


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def min_eig(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(symmetrize(np.atleast_2d(a)))[0])
