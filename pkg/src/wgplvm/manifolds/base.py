"""Core abstractions: manifolds, points, tangent vectors and frames.

Every supported space stores its points in a canonical ambient coordinate
vector chosen so that the Riemannian inner product of two tangent vectors
equals the plain dot product of their ambient coordinates. Frames,
intrinsic coordinates and Fréchet means below all rely on that convention.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..errors import (
    ConvergenceError,
    DimensionMismatchError,
    InvalidPointError,
    NumericalError,
)

#: Tolerance used when validating point and tangent invariants.
POINT_TOL = 1e-9

_FRAME_DROP_TOL = 1e-8


class Manifold(ABC):
    """A Riemannian data space operating on raw coordinate arrays.

    Concrete subclasses are small frozen dataclasses; instances compare by
    value and are safe to share between threads (all operations are pure).
    """

    kind = "abstract"

    @property
    @abstractmethod
    def ambient_dim(self) -> int:
        """Length of the canonical coordinate representation."""

    @property
    @abstractmethod
    def intrinsic_dim(self) -> int:
        """Dimension of the manifold (and of every tangent space)."""

    @property
    def injectivity_radius(self) -> float:
        """Largest tangent norm for which exp is guaranteed invertible."""
        return float("inf")

    def _as_ambient(self, coords, what="vector") -> np.ndarray:
        arr = np.asarray(coords, dtype=float)
        if arr.shape != (self.ambient_dim,):
            raise DimensionMismatchError(
                f"{self!r} expects a {what} of length {self.ambient_dim}, "
                f"got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidPointError(f"non-finite {what} on {self!r}")
        return arr

    @abstractmethod
    def check_point(self, coords: np.ndarray) -> None:
        """Raise :class:`InvalidPointError` unless ``coords`` is a valid point."""

    def check_tangent(self, point: np.ndarray, vector: np.ndarray,
                      tol: float = POINT_TOL) -> None:
        vector = self._as_ambient(vector, "tangent vector")
        residual = vector - self.tangent_projection(point) @ vector
        worst = float(np.max(np.abs(residual))) if residual.size else 0.0
        if worst > tol:
            raise InvalidPointError(
                f"vector is not tangent at the given basepoint "
                f"(residual {worst:.2e} exceeds {tol:g})")

    @abstractmethod
    def exp(self, point: np.ndarray, vector: np.ndarray) -> np.ndarray:
        """Follow the geodesic from ``point`` with initial velocity ``vector``."""

    @abstractmethod
    def log(self, point: np.ndarray, other: np.ndarray) -> np.ndarray:
        """Minimal-norm initial velocity whose geodesic reaches ``other``."""

    def dist(self, point: np.ndarray, other: np.ndarray) -> float:
        return float(np.linalg.norm(self.log(point, other)))

    @abstractmethod
    def tangent_projection(self, point: np.ndarray) -> np.ndarray:
        """Orthogonal projector (ambient x ambient) onto the tangent subspace."""

    @abstractmethod
    def project(self, coords: np.ndarray) -> np.ndarray:
        """Nearest-point style projection of ambient coordinates onto the manifold."""

    @abstractmethod
    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        ...

    def random_tangent(self, point: np.ndarray, rng: np.random.Generator,
                       scale: float = 1.0) -> np.ndarray:
        raw = rng.standard_normal(self.ambient_dim)
        return scale * (self.tangent_projection(point) @ raw)

    @abstractmethod
    def constraint_violation(self, coords: np.ndarray) -> float:
        """How far ambient coordinates are from satisfying the point invariants."""

    @abstractmethod
    def to_dict(self) -> dict:
        ...


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    """A validated point, stored in canonical ambient coordinates."""

    manifold: Manifold
    coords: np.ndarray

    def __post_init__(self):
        arr = self.manifold._as_ambient(self.coords, "point").copy()
        self.manifold.check_point(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A tangent vector at ``basepoint``, in ambient coordinates."""

    basepoint: ManifoldPoint
    coords: np.ndarray

    def __post_init__(self):
        man = self.basepoint.manifold
        arr = man._as_ambient(self.coords, "tangent vector").copy()
        man.check_tangent(self.basepoint.coords, arr)
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)

    @property
    def manifold(self) -> Manifold:
        return self.basepoint.manifold

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))


@dataclass(frozen=True, eq=False)
class TangentFrame:
    """Orthonormal basis of the tangent space at a point.

    ``basis`` holds one basis vector per row, in ambient coordinates.
    Because the canonical coordinates are metric-compatible, intrinsic
    coordinates are plain inner products against the rows.
    """

    basepoint: ManifoldPoint
    basis: np.ndarray

    def __post_init__(self):
        man = self.basepoint.manifold
        basis = np.asarray(self.basis, dtype=float).copy()
        if basis.shape != (man.intrinsic_dim, man.ambient_dim):
            raise DimensionMismatchError(
                f"frame on {man!r} must have shape "
                f"({man.intrinsic_dim}, {man.ambient_dim}), got {basis.shape}")
        gram = basis @ basis.T
        if not np.allclose(gram, np.eye(basis.shape[0]), atol=1e-8):
            raise NumericalError("frame rows are not orthonormal")
        basis.flags.writeable = False
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def to_intrinsic(self, vector) -> np.ndarray:
        """Intrinsic coordinates of a tangent vector at this frame's basepoint."""
        if isinstance(vector, TangentVector):
            if not np.array_equal(vector.basepoint.coords, self.basepoint.coords):
                raise ValueError("tangent vector is based at a different point")
            arr = vector.coords
        else:
            arr = self.basepoint.manifold._as_ambient(vector, "tangent vector")
        return self.basis @ arr

    def from_intrinsic(self, coeffs) -> TangentVector:
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (self.dim,):
            raise DimensionMismatchError(
                f"expected {self.dim} intrinsic coordinates, got shape {c.shape}")
        return TangentVector(self.basepoint, self.basis.T @ c)


def _orthonormalize_rows(candidates, drop_tol=_FRAME_DROP_TOL):
    """Modified Gram-Schmidt, dropping near-null directions. Deterministic."""
    rows = []
    for cand in candidates:
        w = np.array(cand, dtype=float)
        for r in rows:
            w -= (r @ w) * r
        for r in rows:  # second pass for numerical orthogonality
            w -= (r @ w) * r
        nrm = np.linalg.norm(w)
        if nrm > drop_tol:
            rows.append(w / nrm)
    return np.array(rows)


def tangent_basis(point: ManifoldPoint) -> TangentFrame:
    """Deterministic orthonormal frame: projected canonical axes, orthonormalized."""
    man = point.manifold
    projector = man.tangent_projection(point.coords)
    basis = _orthonormalize_rows(projector @ np.eye(man.ambient_dim))
    if len(basis) != man.intrinsic_dim:
        raise NumericalError(
            f"frame construction on {man!r} produced {len(basis)} directions, "
            f"expected {man.intrinsic_dim}")
    return TangentFrame(point, basis)


def _require_same_manifold(point: ManifoldPoint, other: ManifoldPoint) -> None:
    if point.manifold != other.manifold:
        raise DimensionMismatchError(
            f"points live on different manifolds: {point.manifold!r} vs {other.manifold!r}")


def exp_map(point: ManifoldPoint, vector: TangentVector) -> ManifoldPoint:
    if vector.basepoint is not point and not np.array_equal(
            vector.basepoint.coords, point.coords):
        raise ValueError("tangent vector is not based at the given point")
    man = point.manifold
    return ManifoldPoint(man, man.exp(point.coords, vector.coords))


def log_map(point: ManifoldPoint, other: ManifoldPoint) -> TangentVector:
    _require_same_manifold(point, other)
    return TangentVector(point, point.manifold.log(point.coords, other.coords))


def distance(point: ManifoldPoint, other: ManifoldPoint) -> float:
    _require_same_manifold(point, other)
    return point.manifold.dist(point.coords, other.coords)


def project_to_manifold(manifold: Manifold, coords) -> ManifoldPoint:
    arr = manifold._as_ambient(coords, "ambient vector")
    return ManifoldPoint(manifold, manifold.project(arr))


def to_intrinsic(frame: TangentFrame, vector: TangentVector) -> np.ndarray:
    return frame.to_intrinsic(vector)


def from_intrinsic(frame: TangentFrame, coeffs) -> TangentVector:
    return frame.from_intrinsic(coeffs)


def frechet_mean(points, tol: float = 1e-10, max_iter: int = 1000) -> ManifoldPoint:
    """Iterative Fréchet mean: mu <- Exp_mu(mean of Log_mu(p_i)).

    Assumes the data lies in a geodesic ball where the mean is unique (not
    checked). The Euclidean case converges after a single averaging step.
    Raises :class:`ConvergenceError` carrying the last iterate on failure.
    """
    points = list(points)
    if not points:
        raise ValueError("cannot average an empty point list")
    man = points[0].manifold
    for p in points[1:]:
        _require_same_manifold(points[0], p)
    coords = [p.coords for p in points]
    mu = coords[0]
    for _ in range(max_iter):
        update = np.mean([man.log(mu, c) for c in coords], axis=0)
        if np.linalg.norm(update) < tol:
            return ManifoldPoint(man, mu)
        mu = man.exp(mu, update)
    raise ConvergenceError(
        f"Fréchet mean did not converge within {max_iter} iterations",
        last_iterate=ManifoldPoint(man, mu))
