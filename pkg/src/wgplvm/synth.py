"""Deterministic synthetic dataset generators.

Desk-scale stand-ins for the experiment families: a noisy small circle on
the 2-sphere (periodic 1-D structure), a noisy Log-Euclidean geodesic
segment of SPD matrices, and a smoothly deformed polygon family of planar
shapes. Every generator is a pure function of its parameters and seed and
carries the generating parameter of each point as a ``truth`` label.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data_io import Dataset, landmarks_dataset, truth_sidecar_path
from .manifolds import (
    Kendall2D,
    ManifoldPoint,
    Sphere,
    SpdLogEuclidean,
    sym_triu,
    sym_to_vec,
    vec_to_sym,
)


def sphere_circle(n: int = 100, radius: float = 1.0, noise: float = 0.05,
                  seed: int = 0) -> Dataset:
    """Noisy circle of intrinsic radius ``radius`` around the north pole of S^2."""
    if not 0.0 < radius < np.pi / 2:
        raise ValueError("radius must lie in (0, pi/2)")
    manifold = Sphere(2)
    center = np.array([0.0, 0.0, 1.0])
    u1 = np.array([1.0, 0.0, 0.0])
    u2 = np.array([0.0, 1.0, 0.0])
    rng = np.random.default_rng(seed)
    angles = 2.0 * np.pi * np.arange(n) / n
    points = []
    for angle in angles:
        clean = manifold.exp(center,
                             radius * (np.cos(angle) * u1 + np.sin(angle) * u2))
        if noise > 0.0:
            clean = manifold.exp(clean, manifold.random_tangent(clean, rng, noise))
        points.append(ManifoldPoint(manifold, clean))
    return Dataset(manifold, points, labels={"truth": angles.tolist()},
                   provenance=f"synthetic sphere_circle n={n} seed={seed}")


def spd_geodesic(size: int = 3, n: int = 120, span: float = 1.2,
                 noise: float = 0.1, seed: int = 0) -> Dataset:
    """Noisy segment of a Log-Euclidean geodesic in SPD(size)."""
    manifold = SpdLogEuclidean(size)
    rng = np.random.default_rng(seed)
    base_log = np.diag(np.linspace(0.6, -0.6, size))
    raw = rng.standard_normal((size, size))
    direction = 0.5 * (raw + raw.T)
    direction /= np.linalg.norm(direction)
    params = np.linspace(-span, span, n)
    points = []
    for t in params:
        log_mat = base_log + t * direction
        if noise > 0.0:
            bump = rng.standard_normal((size, size))
            log_mat = log_mat + noise * 0.5 * (bump + bump.T)
        vals, vecs = np.linalg.eigh(log_mat)
        points.append(ManifoldPoint(manifold, sym_to_vec((vecs * np.exp(vals)) @ vecs.T)))
    return Dataset(manifold, points, labels={"truth": params.tolist()},
                   provenance=f"synthetic spd_geodesic size={size} n={n} seed={seed}")


def kendall_family(num_landmarks: int = 12, n: int = 80, amplitude: float = 0.35,
                   noise: float = 0.01, seed: int = 0) -> Dataset:
    """Smoothly deformed ellipse-like polygons in Kendall's shape space."""
    if num_landmarks < 3:
        raise ValueError("need at least 3 landmarks")
    rng = np.random.default_rng(seed)
    thetas = 2.0 * np.pi * np.arange(num_landmarks) / num_landmarks
    params = np.linspace(0.0, 1.0, n)
    shapes = []
    for t in params:
        radii = 1.0 + amplitude * t * np.cos(2.0 * thetas)
        xy = np.column_stack([radii * np.cos(thetas), 0.6 * radii * np.sin(thetas)])
        if noise > 0.0:
            xy = xy + noise * rng.standard_normal(xy.shape)
        shapes.append(xy.ravel())
    ds = landmarks_dataset(
        shapes, labels={"truth": params.tolist()}, reference_index=0,
        provenance=f"synthetic kendall_family k={num_landmarks} n={n} seed={seed}")
    return ds


GENERATORS = {
    "sphere_circle": (sphere_circle, {"n": 100, "radius": 1.0, "noise": 0.05}),
    "spd_geodesic": (spd_geodesic, {"size": 3, "n": 120, "span": 1.2, "noise": 0.1}),
    "kendall_family": (kendall_family, {"num_landmarks": 12, "n": 80,
                                        "amplitude": 0.35, "noise": 0.01}),
}


def generate(kind: str, params: dict | None = None, seed: int = 0) -> Dataset:
    if kind not in GENERATORS:
        raise ValueError(f"unknown synthetic dataset kind {kind!r}; "
                         f"expected one of {sorted(GENERATORS)}")
    func, defaults = GENERATORS[kind]
    merged = dict(defaults)
    for key, value in (params or {}).items():
        if key not in defaults:
            raise ValueError(f"unknown parameter {key!r} for {kind!r}; "
                             f"expected one of {sorted(defaults)}")
        merged[key] = value
    return func(seed=seed, **merged)


def _fmt(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def write_dataset(dataset: Dataset, path) -> tuple:
    """Write a dataset in its loader's file format plus a truth-label sidecar.

    Returns ``(data_path, labels_path_or_None)``. Byte-identical for
    identical datasets.
    """
    path = Path(path)
    manifold = dataset.manifold
    lines = []
    if isinstance(manifold, Sphere):
        lines.append("# x,y,z")
        lines.extend(_fmt(p.coords) for p in dataset.points)
    elif isinstance(manifold, SpdLogEuclidean):
        lines.append("# upper-triangle entries, row-major")
        lines.extend(_fmt(sym_triu(vec_to_sym(p.coords, manifold.size)))
                     for p in dataset.points)
    elif isinstance(manifold, Kendall2D):
        lines.append("# x1,y1,...,xk,yk")
        lines.extend(_fmt(p.coords) for p in dataset.points)
    else:
        raise ValueError(f"no file format for manifold kind {manifold.kind!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    labels_path = None
    if "truth" in dataset.labels:
        labels_path = truth_sidecar_path(path)
        rows = ["# index,truth"]
        rows.extend(f"{i},{repr(float(v))}"
                    for i, v in enumerate(dataset.labels["truth"]))
        labels_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path, labels_path
