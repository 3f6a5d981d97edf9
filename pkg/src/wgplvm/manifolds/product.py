"""Product manifolds: all operations apply componentwise on coordinate slices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scipy.linalg import block_diag

from .base import Manifold


@dataclass(frozen=True)
class Product(Manifold):
    components: tuple

    kind = "product"

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("product of zero manifolds")
        object.__setattr__(self, "components", comps)

    def _slices(self):
        out, start = [], 0
        for comp in self.components:
            out.append(slice(start, start + comp.ambient_dim))
            start += comp.ambient_dim
        return out

    @property
    def ambient_dim(self) -> int:
        return sum(c.ambient_dim for c in self.components)

    @property
    def intrinsic_dim(self) -> int:
        return sum(c.intrinsic_dim for c in self.components)

    @property
    def injectivity_radius(self) -> float:
        return min(c.injectivity_radius for c in self.components)

    def check_point(self, coords):
        for comp, sl in zip(self.components, self._slices()):
            comp.check_point(coords[sl])

    def exp(self, point, vector):
        p = self._as_ambient(point, "point")
        v = self._as_ambient(vector)
        return np.concatenate([comp.exp(p[sl], v[sl])
                               for comp, sl in zip(self.components, self._slices())])

    def log(self, point, other):
        p = self._as_ambient(point, "point")
        q = self._as_ambient(other, "point")
        return np.concatenate([comp.log(p[sl], q[sl])
                               for comp, sl in zip(self.components, self._slices())])

    def dist(self, point, other):
        p = self._as_ambient(point, "point")
        q = self._as_ambient(other, "point")
        return float(np.sqrt(sum(comp.dist(p[sl], q[sl]) ** 2
                                 for comp, sl in zip(self.components, self._slices()))))

    def tangent_projection(self, point):
        p = self._as_ambient(point, "point")
        return block_diag(*[comp.tangent_projection(p[sl])
                            for comp, sl in zip(self.components, self._slices())])

    def project(self, coords):
        x = self._as_ambient(coords)
        return np.concatenate([comp.project(x[sl])
                               for comp, sl in zip(self.components, self._slices())])

    def random_point(self, rng):
        return np.concatenate([comp.random_point(rng) for comp in self.components])

    def constraint_violation(self, coords):
        x = np.asarray(coords, float)
        return max(comp.constraint_violation(x[sl])
                   for comp, sl in zip(self.components, self._slices()))

    def to_dict(self):
        return {"kind": self.kind,
                "components": [c.to_dict() for c in self.components]}
