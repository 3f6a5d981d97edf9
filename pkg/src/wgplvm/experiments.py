"""Run configuration, evaluation protocols and report assembly.

The three protocols mirror the model comparison tasks: encoding (round-trip
reconstruction error under the intrinsic and Euclidean metrics), uncertainty
quantification (fraction of predictive samples closer to the mean prediction
than the held-out point, with its calibration curve) and latent-space export.
Repetitions resample the train/test split with derived seeds and refit, so
reports are deterministic functions of the configuration.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data_io, synth
from .data_io import Dataset
from .errors import ConfigError, CutLocusError
from .kernels import KernelSpec
from .manifolds import Manifold, ManifoldPoint, manifold_from_dict
from .model import (
    FitConfig,
    ModelState,
    Posterior,
    baseline_gplvm,
    fit,
    make_state,
    state_from_dict,
    state_to_dict,
)

MODEL_KINDS = ("wgplvm", "gplvm", "gplvm_proj")
CHECKPOINT_FORMAT = "wgplvm-checkpoint"


# -- configuration -----------------------------------------------------------


def _take_keys(section: dict, allowed, where: str) -> dict:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")
    return dict(section)


@dataclass
class DatasetConfig:
    loader: str = "synth"
    path: str | None = None
    size: int = 3                  # spd loader: matrix dimension
    reference_index: int = 0       # landmarks loader
    window: int = 20               # prices loader
    stride: int = 7
    log_returns: bool = False
    kind: str = "sphere_circle"    # synth loader
    params: dict = field(default_factory=dict)
    synth_seed: int | None = None

    _LOADERS = ("directions", "landmarks", "spd", "prices", "synth")

    @classmethod
    def from_dict(cls, section: dict) -> "DatasetConfig":
        cfg = cls(**_take_keys(section, cls.__dataclass_fields__, "dataset"))
        if cfg.loader not in cls._LOADERS:
            raise ConfigError(f"unknown loader {cfg.loader!r}; "
                              f"expected one of {cls._LOADERS}")
        if cfg.loader != "synth" and not cfg.path:
            raise ConfigError(f"loader {cfg.loader!r} requires a 'path'")
        return cfg


@dataclass
class RunConfig:
    """Fully resolved run description; parseable from one JSON document.

    Unset seeds (split, synthetic data) default to the base ``seed``.
    """

    seed: int = 0
    model: str = "wgplvm"
    latent_dim: int = 1
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    kernel_family: str = "rbf"
    signal_var: float = 1.0
    lengthscale_sq: float = 1.0
    noise_var: float = 1e-2
    step: float = 1e-2
    max_iter: int = 2000
    grad_tol: float = 1e-6
    train_fraction: float = 0.8
    split_seed: int | None = None
    init_latents: str = "pga"      # "pga" | "truth" | path to a latent CSV
    encode_restarts: int = 9
    uq_samples: int = 50
    uq_bins: int = 10
    out_dir: str = "out"

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model {self.model!r}; "
                              f"expected one of {MODEL_KINDS}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie strictly between 0 and 1")
        for name in ("signal_var", "lengthscale_sq", "noise_var"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.latent_dim < 1:
            raise ConfigError("latent_dim must be at least 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        allowed = {
            "seed", "model", "latent_dim", "dataset", "kernel", "optimizer",
            "split", "init_latents", "encode", "uq", "out_dir",
        }
        unknown = set(doc) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key in ("seed", "model", "latent_dim", "init_latents", "out_dir"):
            if key in doc:
                kwargs[key] = doc[key]
        if "dataset" in doc:
            kwargs["dataset"] = DatasetConfig.from_dict(doc["dataset"])
        if "kernel" in doc:
            sec = _take_keys(doc["kernel"],
                             ("family", "signal_var", "lengthscale_sq", "noise_var"),
                             "kernel")
            kwargs["kernel_family"] = sec.get("family", "rbf")
            for key in ("signal_var", "lengthscale_sq", "noise_var"):
                if key in sec:
                    kwargs[key] = float(sec[key])
        if "optimizer" in doc:
            sec = _take_keys(doc["optimizer"], ("step", "max_iter", "grad_tol"),
                             "optimizer")
            kwargs.update({k: sec[k] for k in sec})
        if "split" in doc:
            sec = _take_keys(doc["split"], ("train_fraction", "seed"), "split")
            if "train_fraction" in sec:
                kwargs["train_fraction"] = float(sec["train_fraction"])
            if sec.get("seed") is not None:
                kwargs["split_seed"] = int(sec["seed"])
        if "encode" in doc:
            sec = _take_keys(doc["encode"], ("restarts",), "encode")
            if "restarts" in sec:
                kwargs["encode_restarts"] = int(sec["restarts"])
        if "uq" in doc:
            sec = _take_keys(doc["uq"], ("num_samples", "bins"), "uq")
            if "num_samples" in sec:
                kwargs["uq_samples"] = int(sec["num_samples"])
            if "bins" in sec:
                kwargs["uq_bins"] = int(sec["bins"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "model": self.model,
            "latent_dim": self.latent_dim,
            "dataset": {k: getattr(self.dataset, k)
                        for k in DatasetConfig.__dataclass_fields__},
            "kernel": {"family": self.kernel_family, "signal_var": self.signal_var,
                       "lengthscale_sq": self.lengthscale_sq,
                       "noise_var": self.noise_var},
            "optimizer": {"step": self.step, "max_iter": self.max_iter,
                          "grad_tol": self.grad_tol},
            "split": {"train_fraction": self.train_fraction,
                      "seed": self.resolved_split_seed},
            "init_latents": self.init_latents,
            "encode": {"restarts": self.encode_restarts},
            "uq": {"num_samples": self.uq_samples, "bins": self.uq_bins},
            "out_dir": self.out_dir,
        }

    @property
    def resolved_split_seed(self) -> int:
        return self.seed if self.split_seed is None else self.split_seed

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(family=self.kernel_family,
                          log_signal_var=math.log(self.signal_var),
                          log_lengthscale=math.log(self.lengthscale_sq),
                          log_noise_var=math.log(self.noise_var))

    def fit_config(self) -> FitConfig:
        return FitConfig(step=self.step, max_iter=self.max_iter,
                         grad_tol=self.grad_tol)


def load_config(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return RunConfig.from_dict(doc)


def build_dataset(config: RunConfig, base_dir=None) -> Dataset:
    dcfg = config.dataset
    base = Path(base_dir) if base_dir else Path(".")

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    if dcfg.loader == "synth":
        seed = config.seed if dcfg.synth_seed is None else dcfg.synth_seed
        try:
            return synth.generate(dcfg.kind, dcfg.params, seed=seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    path = resolve(dcfg.path)
    if dcfg.loader == "directions":
        ds = data_io.load_directions(path)
    elif dcfg.loader == "landmarks":
        ds = data_io.load_landmarks(path, reference_index=dcfg.reference_index)
    elif dcfg.loader == "spd":
        ds = data_io.load_spd(path, size=dcfg.size)
    else:  # prices
        prices = data_io.load_prices(path)
        if dcfg.log_returns:
            prices = data_io.log_returns(prices)
        ds = data_io.rolling_covariances(prices, window=dcfg.window,
                                         stride=dcfg.stride)
    sidecar = data_io.truth_sidecar_path(path)
    if sidecar.exists():
        truth = data_io.load_truth_sidecar(sidecar)
        if len(truth) == len(ds):
            ds.labels["truth"] = truth
    return ds


# -- fitted models -----------------------------------------------------------


@dataclass(eq=False)
class FittedModel:
    """A trained state together with the data manifold and the model kind.

    For the Euclidean baselines the state lives on a flat space over the
    ambient coordinates; ``gplvm_proj`` additionally projects raw predictions
    onto the data manifold. Intrinsic-metric evaluation projects the plain
    ``gplvm`` outputs first, since the intrinsic distance is only defined on
    the manifold.
    """

    kind: str
    data_manifold: Manifold
    state: ModelState

    def __post_init__(self):
        self._posterior = None

    @property
    def posterior(self) -> Posterior:
        if self._posterior is None:
            self._posterior = Posterior(self.state)
        return self._posterior

    def encode_point(self, point: ManifoldPoint, restarts: int, rng) -> np.ndarray:
        if self.kind == "wgplvm":
            target = point
        else:
            target = ManifoldPoint(self.state.manifold, point.coords)
        return self.posterior.encode(target, restarts=restarts, rng=rng)

    def raw_reconstruction(self, latent) -> np.ndarray:
        """Model output at a latent location, in ambient coordinates."""
        coords = self.posterior.predict(latent).mean_point().coords
        if self.kind == "gplvm_proj":
            return self.data_manifold.project(coords)
        return coords

    def reconstruction_errors(self, point: ManifoldPoint, latent):
        """(intrinsic error, Euclidean error, constraint violation) at a test point."""
        raw = self.raw_reconstruction(latent)
        violation = self.data_manifold.constraint_violation(raw)
        euclidean = float(np.linalg.norm(point.coords - raw))
        on_manifold = raw if self.kind != "gplvm" else self.data_manifold.project(raw)
        intrinsic = self.data_manifold.dist(point.coords, on_manifold)
        return intrinsic, euclidean, violation

    def predictive_draws(self, latent, count: int, seed):
        """Raw ambient sample coordinates plus the raw mean prediction."""
        pred = self.posterior.predict(latent)
        samples = np.stack([p.coords for p in pred.sample(seed, count)])
        return samples, pred.mean_point().coords


def fit_single(config: RunConfig, dataset: Dataset, train_idx,
               model: str | None = None) -> FittedModel:
    """Fit one model of the configured kind on the given training subset."""
    kind = model or config.model
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model {kind!r}")
    train_idx = list(train_idx)
    points = [dataset.points[i] for i in train_idx]
    init = _resolve_init(config, dataset, train_idx)
    kernel = config.kernel_spec()
    if kind == "wgplvm":
        state = make_state(dataset.manifold, points, config.latent_dim, kernel,
                           latents=init)
    else:
        state = baseline_gplvm(points, config.latent_dim, kernel, latents=init)
    state = fit(state, config.fit_config())
    return FittedModel(kind=kind, data_manifold=dataset.manifold, state=state)


def _resolve_init(config: RunConfig, dataset: Dataset, train_idx):
    mode = config.init_latents
    if mode == "pga":
        return None
    if mode == "truth":
        if "truth" not in dataset.labels:
            raise ConfigError("init_latents='truth' needs a dataset with truth labels")
        if config.latent_dim != 1:
            raise ConfigError("init_latents='truth' requires latent_dim == 1")
        truth = np.asarray([float(dataset.labels["truth"][i]) for i in train_idx])
        return truth.reshape(-1, 1)
    latents = data_io.load_latents(mode)
    if latents.shape != (len(dataset), config.latent_dim):
        raise ConfigError(
            f"latent init file has shape {latents.shape}, expected "
            f"({len(dataset)}, {config.latent_dim})")
    return latents[train_idx]


# -- checkpoints -------------------------------------------------------------


def checkpoint_dict(fitted: FittedModel, config: RunConfig, train_idx,
                    train_labels: dict) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "model": fitted.kind,
        "data_manifold": fitted.data_manifold.to_dict(),
        "state": state_to_dict(fitted.state),
        "config": config.to_dict(),
        "train_indices": [int(i) for i in train_idx],
        "train_labels": train_labels,
    }


def save_checkpoint(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def load_checkpoint(path):
    """Returns (FittedModel, RunConfig, checkpoint dict)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"checkpoint not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"checkpoint is not valid JSON: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError("file is not a model checkpoint")
    fitted = FittedModel(kind=doc["model"],
                         data_manifold=manifold_from_dict(doc["data_manifold"]),
                         state=state_from_dict(doc["state"]))
    config = RunConfig.from_dict(doc["config"])
    return fitted, config, doc


# -- reports -----------------------------------------------------------------


@dataclass(eq=False)
class ExperimentReport:
    """Aggregated protocol results; encoding and calibration sections are optional."""

    model: str
    repetitions: int
    rmse_intrinsic: list = field(default_factory=list)
    rmse_euclidean: list = field(default_factory=list)
    excluded: list = field(default_factory=list)
    violation_rate: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    fractions_intrinsic: np.ndarray | None = None
    fractions_euclidean: np.ndarray | None = None
    bins: int = 10

    @staticmethod
    def _mean_stderr(values):
        arr = np.asarray(values, dtype=float)
        if arr.size == 0:
            return float("nan"), float("nan")
        stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        return float(arr.mean()), stderr

    def validate(self) -> None:
        if any(v < 0 for v in self.rmse_intrinsic + self.rmse_euclidean):
            raise ValueError("RMSE values must be nonnegative")
        for fracs in (self.fractions_intrinsic, self.fractions_euclidean):
            if fracs is not None and fracs.size:
                if fracs.min() < 0.0 or fracs.max() > 1.0:
                    raise ValueError("calibration fractions must lie in [0, 1]")

    def sup_distance(self, which: str = "intrinsic") -> float | None:
        fracs = (self.fractions_intrinsic if which == "intrinsic"
                 else self.fractions_euclidean)
        if fracs is None or fracs.size == 0:
            return None
        return ks_statistic(fracs)

    def histogram(self, which: str = "intrinsic"):
        fracs = (self.fractions_intrinsic if which == "intrinsic"
                 else self.fractions_euclidean)
        if fracs is None:
            return None
        counts, edges = np.histogram(fracs, bins=self.bins, range=(0.0, 1.0))
        width = edges[1] - edges[0]
        density = counts / max(1, fracs.size) / width
        return edges, counts, density

    def cumulative(self, which: str = "intrinsic"):
        fracs = (self.fractions_intrinsic if which == "intrinsic"
                 else self.fractions_euclidean)
        if fracs is None or fracs.size == 0:
            return None
        ordered = np.sort(fracs)
        cdf = np.arange(1, ordered.size + 1) / ordered.size
        return ordered, cdf

    def summary_dict(self) -> dict:
        out = {"model": self.model, "repetitions": self.repetitions}
        if self.rmse_intrinsic:
            mean, err = self._mean_stderr(self.rmse_intrinsic)
            out["rmse_intrinsic"] = {"mean": mean, "stderr": err,
                                     "per_repetition": list(self.rmse_intrinsic)}
            mean, err = self._mean_stderr(self.rmse_euclidean)
            out["rmse_euclidean"] = {"mean": mean, "stderr": err,
                                     "per_repetition": list(self.rmse_euclidean)}
            out["excluded_cut_locus"] = list(self.excluded)
            out["violation_rate"] = list(self.violation_rate)
            out["seconds"] = list(self.seconds)
        if self.fractions_intrinsic is not None:
            out["calibration"] = {
                "num_fractions": int(self.fractions_intrinsic.size),
                "sup_distance_intrinsic": self.sup_distance("intrinsic"),
            }
            if self.fractions_euclidean is not None:
                out["calibration"]["sup_distance_euclidean"] = \
                    self.sup_distance("euclidean")
        return out


def ks_statistic(samples) -> float:
    """Sup distance of the empirical CDF from the uniform diagonal on [0, 1]."""
    ordered = np.sort(np.asarray(samples, dtype=float))
    n = ordered.size
    grid = np.arange(1, n + 1) / n
    return float(np.max(np.maximum(grid - ordered, ordered - (grid - 1.0 / n))))


def _rep_seed(config: RunConfig, rep: int) -> int:
    return config.resolved_split_seed + rep


def _rep_models(config: RunConfig, dataset: Dataset, repetitions: int,
                model: str, reuse: FittedModel | None):
    """Yield (rep, fitted, test_points) across resampled train/test splits."""
    for rep in range(repetitions):
        seed = _rep_seed(config, rep)
        train_idx, test_idx = data_io.split_indices(
            len(dataset), config.train_fraction, seed)
        if (reuse is not None and rep == 0 and reuse.kind == model
                and seed == config.resolved_split_seed):
            fitted = reuse
        else:
            fitted = fit_single(config, dataset, train_idx, model=model)
        yield rep, fitted, [dataset.points[i] for i in test_idx]


def encode_report(config: RunConfig, dataset: Dataset, repetitions: int = 1,
                  model: str | None = None, fitted: FittedModel | None = None,
                  test_points=None) -> ExperimentReport:
    """Round-trip reconstruction RMSE under both metrics, per repetition.

    With explicit ``test_points`` (and a fitted model) a single evaluation is
    run; otherwise each repetition resamples the split and refits. Test
    points at the cut locus of the training mean are excluded and counted.
    """
    kind = model or config.model
    report = ExperimentReport(model=kind, repetitions=repetitions)
    if test_points is not None:
        if fitted is None:
            raise ValueError("explicit test points require a fitted model")
        reps = [(0, fitted, list(test_points))]
    else:
        reps = _rep_models(config, dataset, repetitions, kind, fitted)
    for rep, fitted_rep, points in reps:
        start = time.perf_counter()
        rng = np.random.default_rng([config.seed, rep, 101])
        sq_int, sq_euc, violations = [], [], []
        excluded = 0
        for point in points:
            try:
                latent = fitted_rep.encode_point(point, config.encode_restarts, rng)
            except CutLocusError:
                excluded += 1
                continue
            intrinsic, euclidean, violation = \
                fitted_rep.reconstruction_errors(point, latent)
            sq_int.append(intrinsic ** 2)
            sq_euc.append(euclidean ** 2)
            violations.append(violation > 1e-6)
        if not sq_int:
            raise ValueError(f"repetition {rep}: every test point was excluded")
        report.rmse_intrinsic.append(float(np.sqrt(np.mean(sq_int))))
        report.rmse_euclidean.append(float(np.sqrt(np.mean(sq_euc))))
        report.excluded.append(excluded)
        report.violation_rate.append(float(np.mean(violations)))
        report.seconds.append(time.perf_counter() - start)
    report.validate()
    return report


def uq_report(config: RunConfig, dataset: Dataset, repetitions: int = 1,
              model: str | None = None, fitted: FittedModel | None = None,
              test_points=None) -> ExperimentReport:
    """Calibration fractions pooled across repetitions."""
    kind = model or config.model
    report = ExperimentReport(model=kind, repetitions=repetitions,
                              bins=config.uq_bins)
    fractions_int, fractions_euc = [], []
    if test_points is not None:
        if fitted is None:
            raise ValueError("explicit test points require a fitted model")
        reps = [(0, fitted, list(test_points))]
    else:
        reps = _rep_models(config, dataset, repetitions, kind, fitted)
    for rep, fitted_rep, points in reps:
        start = time.perf_counter()
        rng = np.random.default_rng([config.seed, rep, 202])
        excluded = 0
        for index, point in enumerate(points):
            try:
                latent = fitted_rep.encode_point(point, config.encode_restarts, rng)
            except CutLocusError:
                excluded += 1
                continue
            f_int, f_euc = _calibration_fractions(
                fitted_rep, point, latent, config.uq_samples,
                seed=[config.seed, rep, index, 203])
            fractions_int.append(f_int)
            if f_euc is not None:
                fractions_euc.append(f_euc)
        report.excluded.append(excluded)
        report.seconds.append(time.perf_counter() - start)
    report.fractions_intrinsic = np.asarray(fractions_int)
    if fractions_euc:
        report.fractions_euclidean = np.asarray(fractions_euc)
    report.validate()
    return report


def _calibration_fractions(fitted: FittedModel, point: ManifoldPoint, latent,
                           num_samples: int, seed):
    """Fractions of predictive samples strictly closer to the mean prediction
    than the test point; intrinsic metric always, raw Euclidean for the
    unprojected baseline."""
    samples, mean_raw = fitted.predictive_draws(latent, num_samples, seed)
    manifold = fitted.data_manifold
    if fitted.kind == "wgplvm":
        mean_on = mean_raw
        samples_on = samples
    else:
        mean_on = manifold.project(mean_raw)
        samples_on = np.stack([manifold.project(s) for s in samples])
    d_test = manifold.dist(point.coords, mean_on)
    d_samples = np.array([manifold.dist(s, mean_on) for s in samples_on])
    f_int = float(np.mean(d_samples < d_test))
    f_euc = None
    if fitted.kind == "gplvm":
        d_test_e = float(np.linalg.norm(point.coords - mean_raw))
        d_samples_e = np.linalg.norm(samples - mean_raw, axis=1)
        f_euc = float(np.mean(d_samples_e < d_test_e))
    return f_int, f_euc


def self_calibration_fractions(fitted: FittedModel, num_draws: int,
                               num_samples: int, seed: int) -> np.ndarray:
    """Calibration fractions when test points come from the model's own
    predictive distribution (the perfectly calibrated reference setup)."""
    rng = np.random.default_rng(seed)
    latents = fitted.state.latents
    lo, hi = latents.min(axis=0), latents.max(axis=0)
    fractions = []
    for draw in range(num_draws):
        x = rng.uniform(lo, hi)
        pred = fitted.posterior.predict(x)
        test_point = pred.sample([seed, draw, 1], 1)[0]
        f_int, _ = _calibration_fractions(fitted, test_point, x, num_samples,
                                          seed=[seed, draw, 2])
        fractions.append(f_int)
    return np.asarray(fractions)


def latent_rows(doc: dict, label_key: str):
    """(header, rows) of latent coordinates plus one label column from a
    checkpoint document; 'fa' computes fractional anisotropy on demand."""
    from .data_io import fractional_anisotropy
    from .manifolds import SpdLogEuclidean, vec_to_sym

    state = state_from_dict(doc["state"])
    labels = doc.get("train_labels", {})
    manifold = manifold_from_dict(doc["data_manifold"])
    n, q = state.latents.shape
    if label_key == "fa":
        if not (isinstance(manifold, SpdLogEuclidean) and manifold.size == 3):
            raise ConfigError("label 'fa' is only defined for 3x3 SPD data")
        if doc["model"] != "wgplvm":
            raise ConfigError("label 'fa' needs a checkpoint fitted on the manifold")
        values = [fractional_anisotropy(vec_to_sym(p.coords, 3))
                  for p in state.data]
    elif label_key in labels:
        values = labels[label_key]
    else:
        available = sorted(labels) + (["fa"] if isinstance(
            manifold, SpdLogEuclidean) and manifold.size == 3 else [])
        raise ConfigError(f"unknown label key {label_key!r}; "
                          f"available: {available}")
    header = [f"x{j}" for j in range(q)] + [label_key]
    rows = [[*map(float, state.latents[i]), values[i]] for i in range(n)]
    return header, rows
