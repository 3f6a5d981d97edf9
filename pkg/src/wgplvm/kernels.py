"""Covariance functions over the latent space.

Two stationary families are supported:

* ``rbf``        sv * exp(-|x - x'|^2 / (2 l2))
* ``periodic``   sv * exp(-2 sin^2(|t - t'| / 2) / l2), period 2*pi, 1-D latents

Hyperparameters are stored in log space so positivity holds by
construction. The additive white-noise variance appears only on
Gram-matrix diagonals, never in cross covariances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatchError

RBF = "rbf"
PERIODIC = "periodic"
FAMILIES = (RBF, PERIODIC)

#: Names of the optimizable log-hyperparameters, in packing order.
HYPER_KEYS = ("log_signal_var", "log_lengthscale", "log_noise_var")


@dataclass(frozen=True)
class KernelSpec:
    family: str
    log_signal_var: float = 0.0
    log_lengthscale: float = 0.0
    log_noise_var: float = math.log(1e-2)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; "
                             f"expected one of {FAMILIES}")
        for key in HYPER_KEYS:
            if not math.isfinite(getattr(self, key)):
                raise ValueError(f"{key} must be finite")

    @property
    def signal_var(self) -> float:
        return math.exp(self.log_signal_var)

    @property
    def lengthscale_sq(self) -> float:
        return math.exp(self.log_lengthscale)

    @property
    def noise_var(self) -> float:
        return math.exp(self.log_noise_var)

    def with_logs(self, log_signal_var, log_lengthscale, log_noise_var) -> "KernelSpec":
        return replace(self, log_signal_var=float(log_signal_var),
                       log_lengthscale=float(log_lengthscale),
                       log_noise_var=float(log_noise_var))

    # -- evaluation -------------------------------------------------------

    def _check_latents(self, latents) -> np.ndarray:
        arr = np.asarray(latents, dtype=float)
        if arr.ndim != 2:
            raise DimensionMismatchError(f"latent matrix must be 2-D, got {arr.shape}")
        if self.family == PERIODIC and arr.shape[1] != 1:
            raise DimensionMismatchError(
                "the periodic kernel requires 1-dimensional latents")
        return arr

    def value(self, x, y) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if x.shape != y.shape:
            raise DimensionMismatchError(
                f"latent vectors differ in shape: {x.shape} vs {y.shape}")
        if self.family == RBF:
            return self.signal_var * math.exp(
                -float(np.sum((x - y) ** 2)) / (2.0 * self.lengthscale_sq))
        if x.shape != (1,):
            raise DimensionMismatchError(
                "the periodic kernel requires 1-dimensional latents")
        s = math.sin(abs(float(x[0] - y[0])) / 2.0)
        return self.signal_var * math.exp(-2.0 * s * s / self.lengthscale_sq)

    def _sq_dists(self, latents):
        sq = np.sum(latents ** 2, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * latents @ latents.T
        return np.maximum(d2, 0.0)

    def _sin_half_sq(self, latents):
        t = latents[:, 0]
        return np.sin(0.5 * (t[:, None] - t[None, :])) ** 2

    def gram_noiseless(self, latents) -> np.ndarray:
        latents = self._check_latents(latents)
        if self.family == RBF:
            return self.signal_var * np.exp(
                -self._sq_dists(latents) / (2.0 * self.lengthscale_sq))
        return self.signal_var * np.exp(
            -2.0 * self._sin_half_sq(latents) / self.lengthscale_sq)

    def gram(self, latents) -> np.ndarray:
        base = self.gram_noiseless(latents)
        return base + self.noise_var * np.eye(base.shape[0])

    def cross(self, x, latents) -> np.ndarray:
        """Noise-free covariances k(x, X_j) as a vector."""
        latents = self._check_latents(latents)
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != latents.shape[1]:
            raise DimensionMismatchError(
                f"query has {x.shape[0]} coordinates, latents have {latents.shape[1]}")
        if self.family == RBF:
            d2 = np.sum((latents - x) ** 2, axis=1)
            return self.signal_var * np.exp(-d2 / (2.0 * self.lengthscale_sq))
        s2 = np.sin(0.5 * (x[0] - latents[:, 0])) ** 2
        return self.signal_var * np.exp(-2.0 * s2 / self.lengthscale_sq)

    # -- derivatives ------------------------------------------------------

    def grad_hyper(self, latents) -> dict:
        """Gram-matrix derivatives w.r.t. each log hyperparameter."""
        latents = self._check_latents(latents)
        base = self.gram_noiseless(latents)
        if self.family == RBF:
            d_len = base * (self._sq_dists(latents) / (2.0 * self.lengthscale_sq))
        else:
            d_len = base * (2.0 * self._sin_half_sq(latents) / self.lengthscale_sq)
        return {
            "log_signal_var": base,
            "log_lengthscale": d_len,
            "log_noise_var": self.noise_var * np.eye(base.shape[0]),
        }

    def grad_input(self, latents, i, a) -> np.ndarray:
        """Gram-matrix derivative w.r.t. latent entry (i, a); nonzero only in row/column i."""
        latents = self._check_latents(latents)
        n = latents.shape[0]
        if not (0 <= i < n and 0 <= a < latents.shape[1]):
            raise DimensionMismatchError(f"index ({i}, {a}) outside latent matrix")
        base_row = self.cross(latents[i], latents)
        if self.family == RBF:
            row = base_row * (-(latents[i, a] - latents[:, a]) / self.lengthscale_sq)
        else:
            row = base_row * (-np.sin(latents[i, 0] - latents[:, 0])
                              / self.lengthscale_sq)
        row[i] = 0.0
        out = np.zeros((n, n))
        out[i, :] = row
        out[:, i] = row
        return out

    def cross_grad(self, x, latents) -> np.ndarray:
        """Derivatives of ``cross(x, latents)`` w.r.t. x, shape (q, N)."""
        latents = self._check_latents(latents)
        x = np.asarray(x, dtype=float).reshape(-1)
        base = self.cross(x, latents)
        if self.family == RBF:
            return base[None, :] * (-(x[:, None] - latents.T) / self.lengthscale_sq)
        return (base * (-np.sin(x[0] - latents[:, 0]) / self.lengthscale_sq))[None, :]


def latent_gradient(spec: KernelSpec, latents, weight) -> np.ndarray:
    """Contraction sum_{jk} weight[j,k] dK[j,k]/dX for all latent entries at once.

    ``weight`` must be symmetric. Equivalent to contracting
    :meth:`KernelSpec.grad_input` over every (i, a), but vectorized.
    """
    latents = spec._check_latents(latents)
    scaled = (weight * spec.gram_noiseless(latents)) / spec.lengthscale_sq
    if spec.family == RBF:
        rows = scaled.sum(axis=1)
        return -2.0 * (latents * rows[:, None] - scaled @ latents)
    t = latents[:, 0]
    sines = np.sin(t[:, None] - t[None, :])
    return -2.0 * (scaled * sines).sum(axis=1, keepdims=True)
