"""Latent variable model over a Riemannian data space.

Training data is charted into the tangent space at a fixed basepoint (the
training Fréchet mean), producing an N x d coordinate matrix Y. Each of
the d coordinates is modelled by a GP with a shared kernel over N latent
inputs X; the marginal log-likelihood

    -(d N / 2) ln 2 pi - (d / 2) ln |K| - 1/2 tr(K^-1 Y Y^T)

is maximized jointly over X and the log kernel hyperparameters by
adaptive gradient ascent. Predictions are tangent-space GP posteriors
pushed back through the exponential map; the Euclidean baseline is the
same machinery on a flat space, where the chart is a subtraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, DimensionMismatchError, NumericalError
from .kernels import HYPER_KEYS, PERIODIC, KernelSpec, latent_gradient
from .linalg import cho_solve, cholesky_with_jitter, log_det_from_cholesky
from .manifolds import (
    Euclidean,
    Manifold,
    ManifoldPoint,
    TangentFrame,
    exp_map,
    frechet_mean,
    log_map,
    manifold_from_dict,
    tangent_basis,
)
from .optim import AdamAscent

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FitConfig:
    step: float = 1e-2
    max_iter: int = 2000
    grad_tol: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass(eq=False)
class ModelState:
    """Everything needed to evaluate, train and predict from the model.

    ``tangent_data`` row i holds the intrinsic coordinates of
    Log_basepoint(data[i]); regenerating the point through the frame and
    exponential map recovers data[i].
    """

    manifold: Manifold
    data: list
    basepoint: ManifoldPoint
    frame: TangentFrame
    tangent_data: np.ndarray
    latents: np.ndarray
    kernel: KernelSpec
    fit_trace: list = field(default_factory=list)

    @property
    def num_points(self) -> int:
        return self.tangent_data.shape[0]

    @property
    def tangent_dim(self) -> int:
        return self.tangent_data.shape[1]

    @property
    def latent_dim(self) -> int:
        return self.latents.shape[1]


def _pga_scores(tangent_data: np.ndarray, latent_dim: int) -> np.ndarray:
    """Projections onto the top principal directions of the tangent sample
    covariance, with each column standardized to unit variance."""
    n = tangent_data.shape[0]
    cov = tangent_data.T @ tangent_data / n
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:latent_dim]
    directions = vecs[:, order]
    # fix eigenvector signs for reproducibility
    for j in range(directions.shape[1]):
        pivot = np.argmax(np.abs(directions[:, j]))
        if directions[pivot, j] < 0:
            directions[:, j] = -directions[:, j]
    scores = tangent_data @ directions
    std = scores.std(axis=0)
    keep = std > 1e-12
    scores[:, keep] = scores[:, keep] / std[keep]
    return scores


def init_latents_pga(manifold: Manifold, points, latent_dim: int,
                     mean_tol: float = 1e-10, mean_max_iter: int = 1000):
    """Tangent-PCA initialization: Fréchet mean plus standardized principal scores."""
    points = list(points)
    if not 1 <= latent_dim < len(points):
        raise ValueError("need N > latent_dim >= 1")
    basepoint = frechet_mean(points, tol=mean_tol, max_iter=mean_max_iter)
    frame = tangent_basis(basepoint)
    tangent_data = np.stack([frame.to_intrinsic(log_map(basepoint, p)) for p in points])
    return basepoint, _pga_scores(tangent_data, latent_dim)


def make_state(manifold: Manifold, points, latent_dim: int, kernel: KernelSpec,
               latents=None, mean_tol: float = 1e-10,
               mean_max_iter: int = 1000) -> ModelState:
    """Chart the data at its Fréchet mean and set up an untrained state."""
    points = list(points)
    n = len(points)
    if n < 2:
        raise ValueError("need at least two data points")
    basepoint = frechet_mean(points, tol=mean_tol, max_iter=mean_max_iter)
    frame = tangent_basis(basepoint)
    tangent_data = np.stack([frame.to_intrinsic(log_map(basepoint, p)) for p in points])
    d = tangent_data.shape[1]
    if not 1 <= latent_dim < d:
        raise ValueError(
            f"latent dimension must satisfy 1 <= q < {d} (tangent dimension), "
            f"got {latent_dim}")
    if latents is None:
        latents = _pga_scores(tangent_data, latent_dim)
    else:
        latents = np.asarray(latents, dtype=float)
        if latents.shape != (n, latent_dim):
            raise DimensionMismatchError(
                f"initial latents must have shape ({n}, {latent_dim}), "
                f"got {latents.shape}")
        latents = latents.copy()
    return ModelState(manifold=manifold, data=points, basepoint=basepoint,
                      frame=frame, tangent_data=tangent_data, latents=latents,
                      kernel=kernel)


def baseline_gplvm(data, latent_dim: int, kernel: KernelSpec,
                   latents=None) -> ModelState:
    """The flat-space model on raw ambient vectors (chart = subtraction at the mean).

    ``data`` may be a list of points (their ambient coordinates are used) or
    an (N, n) array. The projected variant is this same model with its
    predictions passed through the data manifold's projection afterwards.
    """
    if isinstance(data, np.ndarray):
        matrix = np.asarray(data, dtype=float)
    else:
        matrix = np.stack([p.coords for p in data])
    flat = Euclidean(matrix.shape[1])
    points = [ManifoldPoint(flat, row) for row in matrix]
    return make_state(flat, points, latent_dim, kernel, latents=latents)


# -- objective and gradients ----------------------------------------------


def _objective_core(tangent_data, latents, kernel, want_grad):
    y = tangent_data
    n, d = y.shape
    gram = kernel.gram(latents)
    factor, _ = cholesky_with_jitter(gram)
    alpha = cho_solve(factor, y)
    value = -0.5 * (d * n * math.log(_TWO_PI)
                    + d * log_det_from_cholesky(factor)
                    + float(np.sum(y * alpha)))
    if not want_grad:
        return value, None, None
    gram_inv = cho_solve(factor, np.eye(n))
    weight = 0.5 * (alpha @ alpha.T) - 0.5 * d * gram_inv
    grad_latents = latent_gradient(kernel, latents, weight)
    grad_hyper = {key: float(np.sum(weight * mat))
                  for key, mat in kernel.grad_hyper(latents).items()}
    return value, grad_latents, grad_hyper


def objective(state: ModelState) -> float:
    """Marginal log-likelihood of the tangent data under the current latents."""
    return _objective_core(state.tangent_data, state.latents, state.kernel, False)[0]


def gradients(state: ModelState):
    """Analytic ascent gradients: (N x q latent gradient, per-hyperparameter dict)."""
    _, grad_latents, grad_hyper = _objective_core(
        state.tangent_data, state.latents, state.kernel, True)
    return grad_latents, grad_hyper


def _pack(latents, kernel):
    return np.concatenate([latents.ravel(),
                           [getattr(kernel, key) for key in HYPER_KEYS]])


def _unpack(theta, shape, kernel):
    split = shape[0] * shape[1]
    latents = theta[:split].reshape(shape)
    return latents, kernel.with_logs(*theta[split:])


def fit(state: ModelState, config: FitConfig | None = None) -> ModelState:
    """Adaptive gradient ascent on latents and log hyperparameters.

    Records the objective at every iteration in ``fit_trace`` and returns a
    new state holding the best parameters seen, so the final objective never
    falls below the initial one. Stops early when the gradient infinity-norm
    drops under ``grad_tol``. Raises :class:`ConvergenceError` (with the
    trace attached) if the objective becomes non-finite.
    """
    config = config or FitConfig()
    shape = state.latents.shape
    theta = _pack(state.latents, state.kernel)
    adam = AdamAscent(theta.size, step=config.step, beta1=config.beta1,
                      beta2=config.beta2, eps=config.eps)

    def evaluate(vec):
        latents, kernel = _unpack(vec, shape, state.kernel)
        value, g_lat, g_hyp = _objective_core(
            state.tangent_data, latents, kernel, True)
        grad = np.concatenate([g_lat.ravel(), [g_hyp[key] for key in HYPER_KEYS]])
        return value, grad

    value, grad = evaluate(theta)
    trace = [(0, value)]
    best_value, best_theta = value, theta.copy()
    for iteration in range(1, config.max_iter + 1):
        if float(np.max(np.abs(grad))) < config.grad_tol:
            break
        theta = theta + adam.direction(grad)
        value, grad = evaluate(theta)
        if not math.isfinite(value):
            raise ConvergenceError(
                f"objective became non-finite at iteration {iteration}",
                trace=trace)
        trace.append((iteration, value))
        if value > best_value:
            best_value, best_theta = value, theta.copy()

    latents, kernel = _unpack(best_theta, shape, state.kernel)
    if kernel.family == PERIODIC:
        latents = np.mod(latents, _TWO_PI)
    return replace(state, latents=latents, kernel=kernel, fit_trace=trace)


# -- prediction and encoding ----------------------------------------------


@dataclass(frozen=True, eq=False)
class PosteriorPrediction:
    """Predictive wrapped Gaussian at a latent location.

    The tangent-space posterior at the training basepoint has per-coordinate
    mean ``mean_coeffs`` and a shared scalar variance ``variance`` (the same
    kernel serves every coordinate); samples and the mean prediction wrap
    through the exponential map.
    """

    basepoint: ManifoldPoint
    frame: TangentFrame
    mean_coeffs: np.ndarray
    variance: float

    def __post_init__(self):
        coeffs = np.asarray(self.mean_coeffs, dtype=float).copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "mean_coeffs", coeffs)
        if self.variance < 0.0:
            raise ValueError("predictive variance must be nonnegative")

    def mean_point(self) -> ManifoldPoint:
        return exp_map(self.basepoint, self.frame.from_intrinsic(self.mean_coeffs))

    def sample(self, seed, count: int):
        rng = np.random.default_rng(seed)
        draws = self.mean_coeffs + math.sqrt(self.variance) * rng.standard_normal(
            (count, self.mean_coeffs.shape[0]))
        return [exp_map(self.basepoint, self.frame.from_intrinsic(row))
                for row in draws]


class Posterior:
    """Predictive machinery for a fitted state, with the Cholesky factor cached."""

    def __init__(self, state: ModelState):
        self.state = state
        gram = state.kernel.gram(state.latents)
        self._factor, _ = cholesky_with_jitter(gram)
        self._coeff = cho_solve(self._factor, state.tangent_data)  # K^-1 Y

    def _query(self, latent):
        x = np.asarray(latent, dtype=float).reshape(-1)
        if x.shape[0] != self.state.latent_dim:
            raise DimensionMismatchError(
                f"latent query must have {self.state.latent_dim} coordinates, "
                f"got {x.shape[0]}")
        return x

    def mean_var(self, latent):
        x = self._query(latent)
        kernel = self.state.kernel
        ks = kernel.cross(x, self.state.latents)
        solved = cho_solve(self._factor, ks)
        mean = self._coeff.T @ ks
        var = kernel.signal_var + kernel.noise_var - float(ks @ solved)
        return mean, max(var, 0.0)

    def predict(self, latent) -> PosteriorPrediction:
        mean, var = self.mean_var(latent)
        return PosteriorPrediction(self.state.basepoint, self.state.frame, mean, var)

    def _target_coeffs(self, target):
        if isinstance(target, ManifoldPoint):
            vec = log_map(self.state.basepoint, target)
            return self.state.frame.to_intrinsic(vec)
        arr = np.asarray(target, dtype=float).reshape(-1)
        if arr.shape[0] != self.state.tangent_dim:
            raise DimensionMismatchError(
                f"target must have {self.state.tangent_dim} tangent coordinates")
        return arr

    def _encode_value_grad(self, x, target):
        kernel = self.state.kernel
        ks = kernel.cross(x, self.state.latents)
        solved = cho_solve(self._factor, ks)
        mean = self._coeff.T @ ks
        var = kernel.signal_var + kernel.noise_var - float(ks @ solved)
        var = max(var, 1e-300)
        resid = target - mean
        rr = float(resid @ resid)
        d = target.shape[0]
        value = -0.5 * d * math.log(_TWO_PI * var) - 0.5 * rr / var

        dks = kernel.cross_grad(x, self.state.latents)  # (q, N)
        dmean = dks @ self._coeff                        # (q, d)
        dvar = -2.0 * dks @ solved                       # (q,)
        grad = (-0.5 * d * dvar / var
                + dmean @ resid / var
                + 0.5 * rr * dvar / var ** 2)
        return value, grad

    def encode(self, target, restarts: int = 9, rng=None) -> np.ndarray:
        """Latent location maximizing the predictive density of ``target``.

        Multi-start gradient ascent: the best training latent plus
        ``restarts`` uniform draws from the empirical latent box. Propagates
        :class:`CutLocusError` when the target cannot be charted.
        """
        coeffs = self._target_coeffs(target)
        rng = np.random.default_rng(rng)
        latents = self.state.latents

        values = [self._encode_value_grad(x, coeffs)[0] for x in latents]
        starts = [latents[int(np.argmax(values))]]
        lo, hi = latents.min(axis=0), latents.max(axis=0)
        starts.extend(rng.uniform(lo, hi) for _ in range(restarts))

        def negated(x):
            value, grad = self._encode_value_grad(x, coeffs)
            return -value, -grad

        best_value, best_x = -np.inf, None
        for start in starts:
            result = minimize(negated, start, jac=True, method="L-BFGS-B")
            if math.isfinite(result.fun) and -result.fun > best_value:
                best_value, best_x = -result.fun, result.x
        if best_x is None:
            raise NumericalError("every encoding start produced a non-finite value")
        if self.state.kernel.family == PERIODIC:
            best_x = np.mod(best_x, _TWO_PI)
        return best_x


def predict(state: ModelState, latent) -> PosteriorPrediction:
    return Posterior(state).predict(latent)


def encode(state: ModelState, target, restarts: int = 9, rng=None) -> np.ndarray:
    return Posterior(state).encode(target, restarts=restarts, rng=rng)


# -- serialization ----------------------------------------------------------

CHECKPOINT_VERSION = 1


def state_to_dict(state: ModelState) -> dict:
    return {
        "version": CHECKPOINT_VERSION,
        "manifold": state.manifold.to_dict(),
        "basepoint": state.basepoint.coords.tolist(),
        "latents": state.latents.tolist(),
        "kernel": {
            "family": state.kernel.family,
            "log_signal_var": state.kernel.log_signal_var,
            "log_lengthscale": state.kernel.log_lengthscale,
            "log_noise_var": state.kernel.log_noise_var,
        },
        "tangent_data": state.tangent_data.tolist(),
        "fit_trace": [[int(i), float(v)] for i, v in state.fit_trace],
    }


def state_from_dict(data: dict) -> ModelState:
    version = data.get("version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r}")
    manifold = manifold_from_dict(data["manifold"])
    basepoint = ManifoldPoint(manifold, np.asarray(data["basepoint"], dtype=float))
    frame = tangent_basis(basepoint)
    tangent_data = np.asarray(data["tangent_data"], dtype=float)
    points = [exp_map(basepoint, frame.from_intrinsic(row)) for row in tangent_data]
    kernel = KernelSpec(**data["kernel"])
    return ModelState(
        manifold=manifold, data=points, basepoint=basepoint, frame=frame,
        tangent_data=tangent_data,
        latents=np.asarray(data["latents"], dtype=float),
        kernel=kernel,
        fit_trace=[(int(i), float(v)) for i, v in data["fit_trace"]],
    )
