import numpy as np
import pytest

from wgplvm.manifolds import (
    Euclidean,
    Kendall2D,
    ManifoldPoint,
    Product,
    Sphere,
    SpdLogEuclidean,
)

ALL_MANIFOLDS = [
    Euclidean(5),
    Sphere(2),
    Sphere(5),
    Kendall2D(8),
    SpdLogEuclidean(3),
    Product((Sphere(2), Euclidean(2))),
]


def manifold_id(man):
    return repr(man)


@pytest.fixture(params=ALL_MANIFOLDS, ids=manifold_id)
def manifold(request):
    return request.param


def random_point(man, rng):
    return ManifoldPoint(man, man.random_point(rng))


def random_tangent_within(man, point_coords, rng, bound=None):
    """Random tangent with norm drawn uniformly below the injectivity bound."""
    direction = man.random_tangent(point_coords, rng)
    nrm = np.linalg.norm(direction)
    if nrm < 1e-12:
        return direction
    limit = bound if bound is not None else min(man.injectivity_radius - 1e-3, 3.0)
    return direction / nrm * rng.uniform(0.0, limit)


def clustered_points(man, rng, count, spread=0.3):
    """Points inside a small geodesic ball (keeps Fréchet means well-posed)."""
    center = man.random_point(rng)
    out = []
    for _ in range(count):
        v = man.random_tangent(center, rng, spread / np.sqrt(man.intrinsic_dim))
        out.append(ManifoldPoint(man, man.exp(center, v)))
    return out
