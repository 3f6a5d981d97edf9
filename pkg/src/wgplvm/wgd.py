"""Wrapped Gaussian distributions.

A wrapped Gaussian is a zero-mean Gaussian in the tangent space at a
basepoint, pushed onto the manifold by the exponential map. Densities and
conditionals use the minimal-norm preimage of the logarithm throughout
(single mixture component); this is exact whenever the cut locus is empty
and otherwise a lower bound that decays exponentially in the dropped
components' norms.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import JitterWarning
from .linalg import cho_solve, cholesky_with_jitter, gaussian_log_density
from .manifolds import (
    ManifoldPoint,
    TangentFrame,
    exp_map,
    log_map,
    tangent_basis,
)

_SYM_TOL = 1e-10
_PSD_TOL = -1e-10


def _check_cov(cov, dim, name="covariance"):
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (dim, dim):
        raise ValueError(f"{name} must have shape ({dim}, {dim}), got {cov.shape}")
    if np.max(np.abs(cov - cov.T)) > _SYM_TOL:
        raise ValueError(f"{name} is not symmetric")
    if np.linalg.eigvalsh(cov).min() < _PSD_TOL:
        raise ValueError(f"{name} is not positive semidefinite")
    return 0.5 * (cov + cov.T)


@dataclass(frozen=True, eq=False)
class WrappedGaussian:
    """Basepoint, tangent frame at it, and tangent-space covariance (intrinsic coordinates)."""

    basepoint: ManifoldPoint
    frame: TangentFrame
    cov: np.ndarray

    def __post_init__(self):
        if not np.array_equal(self.frame.basepoint.coords, self.basepoint.coords):
            raise ValueError("frame is not built at the distribution's basepoint")
        cov = _check_cov(self.cov, self.frame.dim)
        cov.flags.writeable = False
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.frame.dim


def sample(dist: WrappedGaussian, seed, count: int):
    """Draw ``count`` points by wrapping tangent-space Gaussian draws.

    Deterministic for a fixed seed: standard normals come from numpy's
    seeded Generator and are colored by a (jittered) Cholesky factor.
    """
    rng = np.random.default_rng(seed)
    factor, _ = cholesky_with_jitter(dist.cov)
    draws = rng.standard_normal((count, dist.dim)) @ factor.T
    return [exp_map(dist.basepoint, dist.frame.from_intrinsic(row)) for row in draws]


def log_density_approx(dist: WrappedGaussian, point: ManifoldPoint) -> float:
    """Log density of the minimal-norm preimage under the tangent Gaussian.

    A lower bound of the exact wrapped density; exact when the cut locus is
    empty. Propagates :class:`CutLocusError` for points where the minimal
    preimage is not unique. A singular covariance is jittered and flagged
    with :class:`JitterWarning`.
    """
    coeffs = dist.frame.to_intrinsic(log_map(dist.basepoint, point))
    factor, jitter = cholesky_with_jitter(dist.cov)
    if jitter:
        warnings.warn(f"singular covariance required jitter {jitter:g}",
                      JitterWarning, stacklevel=2)
    return gaussian_log_density(coeffs, factor)


@dataclass(frozen=True, eq=False)
class JointWrappedGaussian:
    """Two wrapped Gaussians coupled by a cross covariance (jointly wrapped)."""

    first: WrappedGaussian
    second: WrappedGaussian
    cross_cov: np.ndarray

    def __post_init__(self):
        cross = np.asarray(self.cross_cov, dtype=float)
        if cross.shape != (self.first.dim, self.second.dim):
            raise ValueError(
                f"cross covariance must have shape "
                f"({self.first.dim}, {self.second.dim}), got {cross.shape}")
        block = np.block([[self.first.cov, cross],
                          [cross.T, self.second.cov]])
        _check_cov(block, self.first.dim + self.second.dim, "joint covariance")
        cross = cross.copy()
        cross.flags.writeable = False
        object.__setattr__(self, "cross_cov", cross)


def condition(joint: JointWrappedGaussian, observed: ManifoldPoint) -> WrappedGaussian:
    """Condition the first component on an observation of the second.

    Uses the single minimal-norm preimage of the observation (weight 1).
    The conditional covariance is computed in the frame at the first
    basepoint and carried to the shifted basepoint by identifying intrinsic
    coordinates through ambient coordinates of the two frames, with no
    curvature correction.
    """
    second = joint.second
    coeffs = second.frame.to_intrinsic(log_map(second.basepoint, observed))
    factor, _ = cholesky_with_jitter(second.cov)
    mean_shift = joint.cross_cov @ cho_solve(factor, coeffs)
    gain = cho_solve(factor, joint.cross_cov.T)  # K2^-1 K21
    cond_cov = joint.first.cov - joint.cross_cov @ gain
    cond_cov = 0.5 * (cond_cov + cond_cov.T)

    if float(np.linalg.norm(mean_shift)) == 0.0:
        return WrappedGaussian(joint.first.basepoint, joint.first.frame, cond_cov)

    new_base = exp_map(joint.first.basepoint,
                       joint.first.frame.from_intrinsic(mean_shift))
    new_frame = tangent_basis(new_base)
    carry = new_frame.basis @ joint.first.frame.basis.T
    new_cov = carry @ cond_cov @ carry.T
    return WrappedGaussian(new_base, new_frame, 0.5 * (new_cov + new_cov.T))
