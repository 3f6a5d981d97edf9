"""Figure rendering for the CLI report paths.

Each report writer drops a PNG next to its delimited output. Rendering is
deliberately plain: the CSV files remain the machine-readable contract.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_FIGSIZE = (5.0, 3.4)
_DPI = 150


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_fit_trace(trace, path) -> None:
    iterations = [it for it, _ in trace]
    values = [v for _, v in trace]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(iterations, values, lw=1.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.grid(alpha=0.3)
    _save(fig, path)


def save_encode_report(report, path) -> None:
    reps = np.arange(len(report.rmse_intrinsic))
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    width = 0.4
    ax.bar(reps - width / 2, report.rmse_intrinsic, width, label="intrinsic")
    ax.bar(reps + width / 2, report.rmse_euclidean, width, label="euclidean")
    mean, err = report._mean_stderr(report.rmse_intrinsic)
    ax.axhline(mean, color="k", lw=0.8, ls="--",
               label=f"intrinsic mean {mean:.3g} ± {err:.2g}")
    ax.set_xlabel("repetition")
    ax.set_ylabel("reconstruction RMSE")
    ax.set_title(report.model)
    ax.legend(fontsize=8)
    _save(fig, path)


def save_calibration(report, path) -> None:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    hist = report.histogram("intrinsic")
    if hist is not None:
        edges, _, density = hist
        centers = 0.5 * (edges[:-1] + edges[1:])
        scale = density.max() if density.max() > 0 else 1.0
        ax.bar(centers, density / scale, width=edges[1] - edges[0],
               alpha=0.35, label="fraction density (scaled)")
    cum = report.cumulative("intrinsic")
    if cum is not None:
        xs, cdf = cum
        ax.step(np.concatenate([[0.0], xs, [1.0]]),
                np.concatenate([[0.0], cdf, [1.0]]),
                where="post", label="cumulative")
    ax.plot([0, 1], [0, 1], "k--", lw=0.8, label="ideal")
    sup = report.sup_distance("intrinsic")
    title = report.model if sup is None else f"{report.model} (sup dist {sup:.3f})"
    ax.set_title(title)
    ax.set_xlabel("fraction of samples closer than the test point")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=8, loc="upper left")
    _save(fig, path)


def save_latent_scatter(latents, values, label_name, path) -> None:
    latents = np.asarray(latents, dtype=float)
    numeric, categories = _numeric_labels(values)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    if latents.shape[1] == 1:
        sc = ax.scatter(latents[:, 0], np.zeros(len(latents)), c=numeric,
                        cmap="viridis", s=14)
        ax.set_xlabel("x0")
        ax.set_yticks([])
    else:
        sc = ax.scatter(latents[:, 0], latents[:, 1], c=numeric,
                        cmap="viridis", s=14)
        ax.set_xlabel("x0")
        ax.set_ylabel("x1")
    bar = fig.colorbar(sc, ax=ax)
    bar.set_label(label_name if categories is None
                  else f"{label_name} (category code)")
    _save(fig, path)


def _numeric_labels(values):
    try:
        return np.array([float(v) for v in values]), None
    except (TypeError, ValueError):
        categories = sorted({str(v) for v in values})
        codes = {c: i for i, c in enumerate(categories)}
        return np.array([codes[str(v)] for v in values], dtype=float), categories
