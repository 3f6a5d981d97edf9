"""Dense linear-algebra helpers shared by the distribution and model code."""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla

from .errors import NumericalError

#: Diagonal loading attempted in order before giving up on a factorization.
JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8, 1e-6)


def cholesky_with_jitter(mat: np.ndarray, ladder=JITTER_LADDER):
    """Lower-triangular Cholesky factor of a symmetric PSD matrix.

    Retries with increasing diagonal jitter and returns ``(factor, jitter_used)``.
    Raises :class:`NumericalError` once the ladder is exhausted.
    """
    mat = np.asarray(mat, dtype=float)
    eye = np.eye(mat.shape[0])
    for jitter in ladder:
        try:
            shifted = mat + jitter * eye if jitter else mat
            return np.linalg.cholesky(shifted), jitter
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(
        f"Cholesky factorization failed for a {mat.shape[0]}x{mat.shape[0]} matrix "
        f"even with jitter {ladder[-1]:g}")


def cho_solve(chol_lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return sla.cho_solve((chol_lower, True), rhs)


def log_det_from_cholesky(chol_lower: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(chol_lower))))


def gaussian_log_density(residual: np.ndarray, chol_lower: np.ndarray) -> float:
    """log N(residual | 0, L L^T) given the lower Cholesky factor L."""
    alpha = sla.solve_triangular(chol_lower, residual, lower=True)
    k = residual.shape[0]
    return float(-0.5 * k * np.log(2.0 * np.pi)
                 - 0.5 * log_det_from_cholesky(chol_lower)
                 - 0.5 * (alpha @ alpha))
