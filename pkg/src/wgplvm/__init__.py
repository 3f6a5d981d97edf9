"""Probabilistic learning of low-dimensional submanifolds of Riemannian data spaces.

A latent variable model whose latent-to-data map is a tangent-space GP
pushed onto the manifold by the exponential map, together with flat-space
baselines (raw and projected), dataset ingestion, synthetic generators and
the evaluation protocols driving the command-line interface.
"""

from .data_io import (
    Dataset,
    fractional_anisotropy,
    load_directions,
    load_landmarks,
    load_prices,
    load_spd,
    rolling_covariances,
    split,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    CutLocusError,
    DataFormatError,
    DimensionMismatchError,
    InvalidPointError,
    JitterWarning,
    NumericalError,
)
from .kernels import KernelSpec
from .manifolds import (
    Euclidean,
    Kendall2D,
    Manifold,
    ManifoldPoint,
    Product,
    Sphere,
    SpdLogEuclidean,
    TangentFrame,
    TangentVector,
    distance,
    exp_map,
    frechet_mean,
    from_intrinsic,
    log_map,
    manifold_from_dict,
    project_to_manifold,
    tangent_basis,
    to_intrinsic,
)
from .model import (
    FitConfig,
    ModelState,
    Posterior,
    PosteriorPrediction,
    baseline_gplvm,
    encode,
    fit,
    gradients,
    init_latents_pga,
    make_state,
    objective,
    predict,
)
from .wgd import JointWrappedGaussian, WrappedGaussian, condition, log_density_approx, sample

__version__ = "0.1.0"
