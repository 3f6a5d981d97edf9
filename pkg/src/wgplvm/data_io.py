"""Dataset ingestion and splitting for the supported experiment families.

All loaders read comma-separated files with '.' decimals; blank lines and
lines starting with '#' are skipped. Invalid points are rejected with the
offending line number rather than silently repaired (the projection onto
the manifold is reserved for the projected baseline, not for ingestion).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .manifolds import (
    Kendall2D,
    Manifold,
    ManifoldPoint,
    Sphere,
    SpdLogEuclidean,
    align_rotation,
    sym_to_vec,
    triu_to_sym,
)

_DIRECTION_NORM_TOL = 1e-6


@dataclass(eq=False)
class Dataset:
    manifold: Manifold
    points: list
    labels: dict = field(default_factory=dict)
    provenance: str = ""

    def __post_init__(self):
        for key, values in self.labels.items():
            if len(values) != len(self.points):
                raise ValueError(
                    f"label {key!r} has {len(values)} entries for "
                    f"{len(self.points)} points")

    def __len__(self) -> int:
        return len(self.points)

    def coords_matrix(self) -> np.ndarray:
        return np.stack([p.coords for p in self.points])


def _data_rows(path):
    path = Path(path)
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            rows.append((lineno, [f.strip() for f in stripped.split(",")]))
    if not rows:
        raise DataFormatError("file contains no data rows", path=str(path))
    return rows


def _floats(fields, path, lineno):
    try:
        return np.array([float(f) for f in fields])
    except ValueError as exc:
        raise DataFormatError(f"non-numeric field: {exc}",
                              path=str(path), line=lineno) from exc


def load_directions(path) -> Dataset:
    """Unit directions, one 'x,y,z' row per observation, in time order.

    Rows are normalized only if their norm is within 1e-6 of one; anything
    further off is rejected as not being a direction.
    """
    manifold = Sphere(2)
    points = []
    for lineno, fields in _data_rows(path):
        if len(fields) != 3:
            raise DataFormatError(f"expected 3 columns, got {len(fields)}",
                                  path=str(path), line=lineno)
        vals = _floats(fields, path, lineno)
        nrm = float(np.linalg.norm(vals))
        if abs(nrm - 1.0) > _DIRECTION_NORM_TOL:
            raise DataFormatError(
                f"row norm {nrm:.8f} is outside the unit tolerance band",
                path=str(path), line=lineno)
        points.append(ManifoldPoint(manifold, vals / nrm))
    return Dataset(manifold, points,
                   labels={"timestamp": list(range(len(points)))},
                   provenance=f"directions from {path}")


def landmarks_dataset(raw_shapes, labels=None, reference_index: int = 0,
                      provenance: str = "") -> Dataset:
    """Build a shape dataset from raw landmark rows (x1,y1,...,xk,yk).

    Each shape is centered, scaled to unit norm and rotation-aligned to the
    shape at ``reference_index``; the output representatives are therefore
    defined up to the reference's own orientation.
    """
    raw_shapes = [np.asarray(s, dtype=float) for s in raw_shapes]
    if not 0 <= reference_index < len(raw_shapes):
        raise ValueError(f"reference index {reference_index} out of range")
    k = raw_shapes[0].shape[0] // 2
    manifold = Kendall2D(k)

    def preshape(flat, where=""):
        xy = flat.reshape(-1, 2)
        centered = (xy - xy.mean(axis=0)).ravel()
        nrm = np.linalg.norm(centered)
        if nrm < 1e-12:
            raise DataFormatError(f"degenerate shape{where}: all landmarks coincide")
        return centered / nrm

    reference = preshape(raw_shapes[reference_index])
    points = []
    for idx, flat in enumerate(raw_shapes):
        aligned = align_rotation(reference, preshape(flat, f" {idx}"))
        points.append(ManifoldPoint(manifold, aligned))
    return Dataset(manifold, points, labels=labels or {}, provenance=provenance)


def load_landmarks(path, reference_index: int = 0) -> Dataset:
    """Planar shapes, one per row as x1,y1,...,xk,yk with an optional
    trailing species label (rows then have an odd field count)."""
    rows = _data_rows(path)
    shapes, species = [], []
    has_labels = len(rows[0][1]) % 2 == 1
    num_fields = len(rows[0][1])
    for lineno, fields in rows:
        if len(fields) != num_fields:
            raise DataFormatError(
                f"inconsistent landmark count: expected {num_fields} fields, "
                f"got {len(fields)}", path=str(path), line=lineno)
        coord_fields = fields[:-1] if has_labels else fields
        vals = _floats(coord_fields, path, lineno)
        xy = vals.reshape(-1, 2)
        if np.linalg.norm((xy - xy.mean(axis=0)).ravel()) < 1e-12:
            raise DataFormatError("degenerate shape: all landmarks coincide",
                                  path=str(path), line=lineno)
        shapes.append(vals)
        if has_labels:
            species.append(fields[-1])
    labels = {"species": species} if has_labels else {}
    return landmarks_dataset(shapes, labels=labels,
                             reference_index=reference_index,
                             provenance=f"landmarks from {path}")


def load_spd(path, size: int) -> Dataset:
    """SPD matrices, one per row as the unscaled upper triangle (row-major),
    with an optional trailing label column. Non-SPD rows are rejected."""
    manifold = SpdLogEuclidean(size)
    m = manifold.ambient_dim
    points, extra = [], []
    has_labels = None
    for lineno, fields in _data_rows(path):
        if len(fields) not in (m, m + 1):
            raise DataFormatError(
                f"expected {m} upper-triangle entries (optionally plus a label), "
                f"got {len(fields)} fields", path=str(path), line=lineno)
        row_labeled = len(fields) == m + 1
        if has_labels is None:
            has_labels = row_labeled
        elif has_labels != row_labeled:
            raise DataFormatError("mixed labeled and unlabeled rows",
                                  path=str(path), line=lineno)
        vals = _floats(fields[:m], path, lineno)
        mat = triu_to_sym(vals, size)
        min_eig = float(np.linalg.eigvalsh(mat).min())
        if min_eig <= 1e-12:
            raise DataFormatError(
                f"matrix is not positive definite (min eigenvalue {min_eig:.3e})",
                path=str(path), line=lineno)
        points.append(ManifoldPoint(manifold, sym_to_vec(mat)))
        if row_labeled:
            extra.append(fields[m])
    labels = {"label": extra} if has_labels else {}
    return Dataset(manifold, points, labels=labels,
                   provenance=f"spd matrices from {path}")


def load_prices(path) -> np.ndarray:
    """Numeric matrix, one row per day, one column per asset."""
    rows = _data_rows(path)
    width = len(rows[0][1])
    out = []
    for lineno, fields in rows:
        if len(fields) != width:
            raise DataFormatError(
                f"inconsistent column count: expected {width}, got {len(fields)}",
                path=str(path), line=lineno)
        out.append(_floats(fields, path, lineno))
    return np.stack(out)


def log_returns(prices: np.ndarray) -> np.ndarray:
    prices = np.asarray(prices, dtype=float)
    if np.any(prices <= 0.0):
        raise DataFormatError("log-returns require strictly positive prices")
    return np.diff(np.log(prices), axis=0)


def rolling_covariances(prices, window: int = 20, stride: int = 7) -> Dataset:
    """Sample covariances over sliding windows of a price matrix.

    For t = window, window + stride, ... the unbiased covariance of rows
    [t - window, t) is emitted, with relative diagonal jitter 1e-8 to keep
    the result positive definite; the label of each matrix is the index of
    the last row in its window. The output count is
    floor((T - window) / stride) + 1.
    """
    prices = np.asarray(prices, dtype=float)
    if prices.ndim != 2:
        raise ValueError("prices must be a 2-D matrix")
    T, num_assets = prices.shape
    if num_assets < 2:
        raise ValueError("need at least two assets")
    if T < window:
        raise ValueError(f"need at least window={window} rows, got {T}")
    if stride < 1 or window < 2:
        raise ValueError("window must be >= 2 and stride >= 1")
    manifold = SpdLogEuclidean(num_assets)
    points, stamps = [], []
    for t in range(window, T + 1, stride):
        block = prices[t - window:t]
        cov = np.cov(block, rowvar=False, ddof=1)
        scale = float(np.mean(np.diag(cov)))
        jittered = cov + 1e-8 * scale * np.eye(num_assets)
        if scale <= 0.0 or float(np.linalg.eigvalsh(jittered).min()) <= 0.0:
            raise DataFormatError(
                f"window [{t - window}, {t}) has a degenerate covariance "
                "(constant prices?)")
        points.append(ManifoldPoint(manifold, sym_to_vec(jittered)))
        stamps.append(t - 1)
    return Dataset(manifold, points, labels={"timestamp": stamps},
                   provenance=f"rolling covariances window={window} stride={stride}")


def fractional_anisotropy(tensor) -> float:
    """Eigenvalue-dispersion descriptor of a 3x3 SPD matrix, in [0, 1]."""
    if isinstance(tensor, ManifoldPoint):
        manifold = tensor.manifold
        if not isinstance(manifold, SpdLogEuclidean) or manifold.size != 3:
            raise ValueError("fractional anisotropy is defined for 3x3 SPD points")
        from .manifolds import vec_to_sym
        mat = vec_to_sym(tensor.coords, 3)
    else:
        mat = np.asarray(tensor, dtype=float)
        if mat.shape != (3, 3):
            raise ValueError("fractional anisotropy needs a 3x3 matrix")
    lam = np.linalg.eigvalsh(mat)
    mean = lam.mean()
    denom = float(np.sqrt(np.sum(lam ** 2)))
    if denom == 0.0:
        return 0.0
    return float(np.sqrt(1.5) * np.sqrt(np.sum((lam - mean) ** 2)) / denom)


def split_indices(n: int, train_fraction: float, seed: int):
    """Seeded uniform shuffle split; deterministic, disjoint, exhaustive."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train fraction must lie strictly between 0 and 1")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    if n_train == 0 or n_train == n:
        raise ValueError(f"split of {n} points at fraction {train_fraction} "
                         "leaves one side empty")
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def take(dataset: Dataset, indices) -> Dataset:
    indices = list(indices)
    labels = {key: [values[i] for i in indices]
              for key, values in dataset.labels.items()}
    return Dataset(dataset.manifold, [dataset.points[i] for i in indices],
                   labels=labels, provenance=dataset.provenance)


def split(dataset: Dataset, train_fraction: float, seed: int):
    train_idx, test_idx = split_indices(len(dataset), train_fraction, seed)
    train = take(dataset, train_idx)
    test = take(dataset, test_idx)
    train.provenance = dataset.provenance + " [train]"
    test.provenance = dataset.provenance + " [test]"
    return train, test


def load_latents(path) -> np.ndarray:
    """Initial latent variables, one comma-separated row per data point."""
    rows = _data_rows(path)
    width = len(rows[0][1])
    out = []
    for lineno, fields in rows:
        if len(fields) != width:
            raise DataFormatError(
                f"inconsistent latent dimension: expected {width}, got {len(fields)}",
                path=str(path), line=lineno)
        out.append(_floats(fields, path, lineno))
    return np.stack(out)


def truth_sidecar_path(data_path) -> Path:
    data_path = Path(data_path)
    return data_path.with_name(data_path.stem + "_labels" + data_path.suffix)


def load_truth_sidecar(path) -> list:
    """Ground-truth latent labels in 'index,value' rows."""
    values = {}
    for lineno, fields in _data_rows(path):
        if len(fields) != 2:
            raise DataFormatError(f"expected 'index,value', got {len(fields)} fields",
                                  path=str(path), line=lineno)
        values[int(float(fields[0]))] = float(fields[1])
    return [values[i] for i in sorted(values)]
