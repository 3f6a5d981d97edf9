"""The unit sphere S^n embedded in R^(n+1).

Exp/log follow the great-circle formulas
    Exp_p(v) = cos(|v|) p + sin(|v|) v / |v|
    Log_p(q) = theta * (q - <p,q> p) / |q - <p,q> p|,  theta = angle(p, q)
with second-order Taylor branches below a small-angle threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CutLocusError, InvalidPointError
from .base import Manifold, POINT_TOL

_SMALL_ANGLE = 1e-7
_DEGENERATE = 1e-9


@dataclass(frozen=True)
class Sphere(Manifold):
    dim: int  # intrinsic dimension; ambient vectors have length dim + 1

    kind = "sphere"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("sphere dimension must be positive")

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    @property
    def intrinsic_dim(self) -> int:
        return self.dim

    @property
    def injectivity_radius(self) -> float:
        return float(np.pi)

    def check_point(self, coords):
        nrm = np.linalg.norm(coords)
        if abs(nrm - 1.0) > POINT_TOL:
            raise InvalidPointError(
                f"sphere point must have unit norm, got {nrm:.12f}")

    def exp(self, point, vector):
        p = self._as_ambient(point, "point")
        v = self._as_ambient(vector)
        t = np.linalg.norm(v)
        if t < _SMALL_ANGLE:
            out = (1.0 - 0.5 * t * t) * p + (1.0 - t * t / 6.0) * v
        else:
            out = np.cos(t) * p + (np.sin(t) / t) * v
        return out / np.linalg.norm(out)

    def log(self, point, other):
        p = self._as_ambient(point, "point")
        q = self._as_ambient(other, "point")
        c = float(np.clip(p @ q, -1.0, 1.0))
        u = q - c * p
        s = float(np.linalg.norm(u))
        theta = np.arctan2(s, c)
        if s < _DEGENERATE:
            if c < 0.0:
                raise CutLocusError(
                    "antipodal sphere points have no unique minimal geodesic")
            v = u * (1.0 + theta * theta / 6.0)
        else:
            v = u * (theta / s)
        return v - (p @ v) * p

    def dist(self, point, other):
        p = self._as_ambient(point, "point")
        q = self._as_ambient(other, "point")
        c = float(np.clip(p @ q, -1.0, 1.0))
        s = float(np.linalg.norm(q - c * p))
        return float(np.arctan2(s, c))

    def tangent_projection(self, point):
        p = self._as_ambient(point, "point")
        return np.eye(self.ambient_dim) - np.outer(p, p)

    def project(self, coords):
        x = self._as_ambient(coords)
        nrm = np.linalg.norm(x)
        if nrm < 1e-12:
            raise InvalidPointError("zero vector has no nearest point on the sphere")
        return x / nrm

    def random_point(self, rng):
        while True:
            x = rng.standard_normal(self.ambient_dim)
            nrm = np.linalg.norm(x)
            if nrm > 1e-6:
                return x / nrm

    def constraint_violation(self, coords):
        return abs(float(np.linalg.norm(coords)) - 1.0)

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim}
