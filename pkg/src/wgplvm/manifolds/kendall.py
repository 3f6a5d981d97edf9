"""Kendall's planar shape space: landmarks modulo translation, scale and rotation.

Shapes with k landmarks are stored as interleaved (x1, y1, ..., xk, yk)
vectors that are centered (landmark centroid at the origin) and scaled to
unit norm, i.e. as pre-shapes on a sphere in R^(2k). The rotation quotient
is handled by aligning the second argument with the optimal rotation before
sphere-style exp/log computations; results live in the horizontal subspace
(orthogonal to the rotation orbit). Only rotations are quotiented, never
reflections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CutLocusError, InvalidPointError
from .base import Manifold, POINT_TOL

_SMALL_ANGLE = 1e-7
_DEGENERATE = 1e-12


def _as_complex(coords: np.ndarray) -> np.ndarray:
    xy = coords.reshape(-1, 2)
    return xy[:, 0] + 1j * xy[:, 1]


def _from_complex(z: np.ndarray) -> np.ndarray:
    return np.column_stack([z.real, z.imag]).ravel()


def align_rotation(reference: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Rotate ``coords`` to minimize the distance to ``reference``.

    Both arguments are centered landmark vectors. Raises
    :class:`CutLocusError` when the optimal rotation is undefined.
    """
    aligned, mag = _align(np.asarray(reference, float), np.asarray(coords, float))
    if aligned is None:
        raise CutLocusError(
            "optimal rotation is undefined for these shapes "
            f"(correlation magnitude {mag:.2e})")
    return aligned


def _align(reference, coords):
    """Optimal-rotation alignment; returns (aligned or None, |correlation|)."""
    z_ref = _as_complex(reference)
    z = _as_complex(coords)
    w = np.sum(z_ref * np.conj(z))
    mag = abs(w)
    if mag < _DEGENERATE:
        return None, mag
    return _from_complex(z * np.exp(1j * np.angle(w))), mag


@dataclass(frozen=True)
class Kendall2D(Manifold):
    num_landmarks: int

    kind = "kendall2d"

    def __post_init__(self):
        if self.num_landmarks < 3:
            raise ValueError("Kendall shapes need at least 3 landmarks")

    @property
    def ambient_dim(self) -> int:
        return 2 * self.num_landmarks

    @property
    def intrinsic_dim(self) -> int:
        return 2 * self.num_landmarks - 4

    @property
    def injectivity_radius(self) -> float:
        return float(np.pi / 2)

    def _centroid(self, coords):
        return coords.reshape(-1, 2).mean(axis=0)

    def check_point(self, coords):
        centroid = np.linalg.norm(self._centroid(coords))
        if centroid > POINT_TOL:
            raise InvalidPointError(
                f"shape is not centered (centroid norm {centroid:.2e})")
        nrm = np.linalg.norm(coords)
        if abs(nrm - 1.0) > POINT_TOL:
            raise InvalidPointError(f"shape must have unit norm, got {nrm:.12f}")

    def exp(self, point, vector):
        p = self._as_ambient(point, "point")
        v = self._as_ambient(vector)
        t = np.linalg.norm(v)
        if t < _SMALL_ANGLE:
            out = (1.0 - 0.5 * t * t) * p + (1.0 - t * t / 6.0) * v
        else:
            out = np.cos(t) * p + (np.sin(t) / t) * v
        # re-center and re-normalize (no-ops in exact arithmetic)
        out = (out.reshape(-1, 2) - out.reshape(-1, 2).mean(axis=0)).ravel()
        return out / np.linalg.norm(out)

    def log(self, point, other):
        p = self._as_ambient(point, "point")
        q = self._as_ambient(other, "point")
        aligned, mag = _align(p, q)
        if aligned is None:
            raise CutLocusError(
                "shape lies at the cut locus: optimal rotation is undefined")
        c = float(np.clip(p @ aligned, -1.0, 1.0))
        u = aligned - c * p
        s = float(np.linalg.norm(u))
        theta = np.arctan2(s, c)
        if s < 1e-9:
            v = u * (1.0 + theta * theta / 6.0)
        else:
            v = u * (theta / s)
        return self.tangent_projection(p) @ v

    def dist(self, point, other):
        p = self._as_ambient(point, "point")
        q = self._as_ambient(other, "point")
        aligned, mag = _align(p, q)
        if aligned is None:
            return float(np.pi / 2)
        c = float(np.clip(p @ aligned, -1.0, 1.0))
        s = float(np.linalg.norm(aligned - c * p))
        return float(np.arctan2(s, c))

    def _rotation_generator(self, point):
        # derivative of rotating every landmark: (x, y) -> (-y, x)
        return _from_complex(1j * _as_complex(point))

    def tangent_projection(self, point):
        p = self._as_ambient(point, "point")
        k = self.num_landmarks
        tx = np.tile([1.0, 0.0], k) / np.sqrt(k)
        ty = np.tile([0.0, 1.0], k) / np.sqrt(k)
        jp = self._rotation_generator(p)
        proj = np.eye(self.ambient_dim)
        for direction in (tx, ty, p, jp):
            proj -= np.outer(direction, direction)
        return proj

    def project(self, coords):
        x = self._as_ambient(coords)
        xy = x.reshape(-1, 2)
        centered = (xy - xy.mean(axis=0)).ravel()
        nrm = np.linalg.norm(centered)
        if nrm < 1e-12:
            raise InvalidPointError(
                "degenerate shape (all landmarks coincide) has no projection")
        return centered / nrm

    def random_point(self, rng):
        return self.project(rng.standard_normal(self.ambient_dim))

    def constraint_violation(self, coords):
        arr = np.asarray(coords, float)
        centroid = float(np.linalg.norm(self._centroid(arr)))
        return max(centroid, abs(float(np.linalg.norm(arr)) - 1.0))

    def to_dict(self):
        return {"kind": self.kind, "num_landmarks": self.num_landmarks}
