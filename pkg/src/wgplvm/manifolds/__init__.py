"""Riemannian data spaces in canonical, metric-compatible ambient coordinates."""

from .base import (
    Manifold,
    ManifoldPoint,
    TangentFrame,
    TangentVector,
    distance,
    exp_map,
    frechet_mean,
    from_intrinsic,
    log_map,
    project_to_manifold,
    tangent_basis,
    to_intrinsic,
)
from .euclidean import Euclidean
from .kendall import Kendall2D, align_rotation
from .product import Product
from .sphere import Sphere
from .spd import SpdLogEuclidean, sym_to_vec, sym_triu, triu_to_sym, vec_to_sym

_SIMPLE_KINDS = {
    Euclidean.kind: lambda d: Euclidean(dim=int(d["dim"])),
    Sphere.kind: lambda d: Sphere(dim=int(d["dim"])),
    Kendall2D.kind: lambda d: Kendall2D(num_landmarks=int(d["num_landmarks"])),
    SpdLogEuclidean.kind: lambda d: SpdLogEuclidean(size=int(d["size"])),
}


def manifold_from_dict(data: dict) -> Manifold:
    """Inverse of ``Manifold.to_dict`` for all supported kinds."""
    kind = data.get("kind")
    if kind == Product.kind:
        return Product(tuple(manifold_from_dict(c) for c in data["components"]))
    try:
        return _SIMPLE_KINDS[kind](data)
    except KeyError as exc:
        raise ValueError(f"unknown manifold kind {kind!r}") from exc


__all__ = [
    "Euclidean",
    "Kendall2D",
    "Manifold",
    "ManifoldPoint",
    "Product",
    "Sphere",
    "SpdLogEuclidean",
    "TangentFrame",
    "TangentVector",
    "align_rotation",
    "distance",
    "exp_map",
    "frechet_mean",
    "from_intrinsic",
    "log_map",
    "manifold_from_dict",
    "project_to_manifold",
    "sym_to_vec",
    "sym_triu",
    "tangent_basis",
    "to_intrinsic",
    "triu_to_sym",
    "vec_to_sym",
]
