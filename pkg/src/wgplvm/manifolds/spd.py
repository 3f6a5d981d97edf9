"""Symmetric positive-definite matrices under the Log-Euclidean geometry.

Canonical coordinates flatten the upper triangle row by row with
off-diagonal entries scaled by sqrt(2), so the flat 2-norm of coordinates
equals the Frobenius norm of the matrix. After the matrix-log chart the
geometry is Euclidean: exp/log are matrix exp/log differences, every
symmetric matrix is tangent, and the canonical axes form a global frame.
The cone boundary (eigenvalues at 0) lies at infinite distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidPointError, NumericalError
from .base import Manifold

_MIN_LOG_EIG = 1e-12
_CLAMP_EIG = 1e-8


def _triu_indices(size: int):
    return np.triu_indices(size)


def sym_to_vec(mat: np.ndarray) -> np.ndarray:
    """Flatten a symmetric matrix to scaled upper-triangle coordinates."""
    mat = np.asarray(mat, dtype=float)
    size = mat.shape[0]
    rows, cols = _triu_indices(size)
    weights = np.where(rows == cols, 1.0, np.sqrt(2.0))
    return mat[rows, cols] * weights


def vec_to_sym(vec: np.ndarray, size: int) -> np.ndarray:
    """Inverse of :func:`sym_to_vec`."""
    vec = np.asarray(vec, dtype=float)
    rows, cols = _triu_indices(size)
    weights = np.where(rows == cols, 1.0, np.sqrt(2.0))
    mat = np.zeros((size, size))
    mat[rows, cols] = vec / weights
    return mat + np.triu(mat, 1).T


def triu_to_sym(values: np.ndarray, size: int) -> np.ndarray:
    """Symmetric matrix from an unscaled upper triangle (file format)."""
    values = np.asarray(values, dtype=float)
    rows, cols = _triu_indices(size)
    mat = np.zeros((size, size))
    mat[rows, cols] = values
    return mat + np.triu(mat, 1).T


def sym_triu(mat: np.ndarray) -> np.ndarray:
    """Unscaled upper triangle of a symmetric matrix (file format)."""
    rows, cols = _triu_indices(np.asarray(mat).shape[0])
    return np.asarray(mat, dtype=float)[rows, cols]


def _eigh(mat):
    try:
        return np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigendecomposition failed: {exc}") from exc


@dataclass(frozen=True)
class SpdLogEuclidean(Manifold):
    size: int  # matrix dimension

    kind = "spd_log_euclidean"

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("matrix size must be positive")

    @property
    def ambient_dim(self) -> int:
        return self.size * (self.size + 1) // 2

    @property
    def intrinsic_dim(self) -> int:
        return self.ambient_dim

    def _log_matrix(self, mat):
        vals, vecs = _eigh(mat)
        if vals.min() < _MIN_LOG_EIG:
            raise InvalidPointError(
                f"matrix is not safely positive definite "
                f"(min eigenvalue {vals.min():.3e})")
        return (vecs * np.log(vals)) @ vecs.T

    def _exp_matrix(self, mat):
        vals, vecs = _eigh(mat)
        return (vecs * np.exp(vals)) @ vecs.T

    def check_point(self, coords):
        vals = _eigh(vec_to_sym(coords, self.size))[0]
        if vals.min() <= 0.0:
            raise InvalidPointError(
                f"matrix is not positive definite (min eigenvalue {vals.min():.3e})")

    def exp(self, point, vector):
        p = self._as_ambient(point, "point")
        v = self._as_ambient(vector)
        log_p = self._log_matrix(vec_to_sym(p, self.size))
        return sym_to_vec(self._exp_matrix(log_p + vec_to_sym(v, self.size)))

    def log(self, point, other):
        p = self._as_ambient(point, "point")
        q = self._as_ambient(other, "point")
        diff = (self._log_matrix(vec_to_sym(q, self.size))
                - self._log_matrix(vec_to_sym(p, self.size)))
        return sym_to_vec(diff)

    def tangent_projection(self, point):
        return np.eye(self.ambient_dim)

    def project(self, coords):
        mat = vec_to_sym(self._as_ambient(coords), self.size)
        vals, vecs = _eigh(mat)
        clamped = np.maximum(vals, _CLAMP_EIG)
        return sym_to_vec((vecs * clamped) @ vecs.T)

    def random_point(self, rng):
        raw = rng.standard_normal((self.size, self.size))
        sym = 0.5 * (raw + raw.T) * 0.5
        return sym_to_vec(self._exp_matrix(sym))

    def constraint_violation(self, coords):
        vals = _eigh(vec_to_sym(np.asarray(coords, float), self.size))[0]
        return max(0.0, -float(vals.min()))

    def to_dict(self):
        return {"kind": self.kind, "size": self.size}
