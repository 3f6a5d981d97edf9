"""Flat Euclidean space; the degenerate baseline case of every operation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Manifold


@dataclass(frozen=True)
class Euclidean(Manifold):
    dim: int

    kind = "euclidean"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("Euclidean dimension must be positive")

    @property
    def ambient_dim(self) -> int:
        return self.dim

    @property
    def intrinsic_dim(self) -> int:
        return self.dim

    def check_point(self, coords):
        pass  # any finite vector is a point; shape checked by callers

    def exp(self, point, vector):
        return self._as_ambient(point, "point") + self._as_ambient(vector)

    def log(self, point, other):
        return self._as_ambient(other, "point") - self._as_ambient(point, "point")

    def dist(self, point, other):
        return float(np.linalg.norm(np.asarray(other, float) - np.asarray(point, float)))

    def tangent_projection(self, point):
        return np.eye(self.dim)

    def project(self, coords):
        return self._as_ambient(coords).copy()

    def random_point(self, rng):
        return rng.standard_normal(self.dim)

    def constraint_violation(self, coords):
        return 0.0

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim}
