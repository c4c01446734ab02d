"""Figure rendering for command outputs. Uses the Agg backend so runs are
headless and the PNG bytes depend only on the plotted data."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "render_ball_counts",
    "render_biorthogonality",
    "render_epsilon_trace",
    "render_loss_curves",
    "render_partition",
    "render_suite_bars",
    "render_surface",
]


def _save(fig, path, tracker=None):
    if tracker is not None:
        tracker.add(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_partition(raster, path, tracker=None):
    fig, ax = plt.subplots(figsize=(6, 6))
    extent = [raster.xs[0], raster.xs[-1], raster.ys[0], raster.ys[-1]]
    ax.imshow(
        raster.ids,
        origin="lower",
        extent=extent,
        cmap="tab20",
        interpolation="nearest",
    )
    by = np.argwhere(raster.boundary)
    if len(by):
        ax.scatter(
            np.asarray(raster.xs)[by[:, 1]],
            np.asarray(raster.ys)[by[:, 0]],
            s=0.2,
            c="black",
        )
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"{int(raster.ids.max()) + 1} regions")
    return _save(fig, path, tracker)


def render_surface(mesh, path, tracker=None):
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    v = mesh.vertices
    ax.scatter(v[:, 0], v[:, 1], v[:, 2], c=mesh.ids, cmap="tab20", s=4)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    return _save(fig, path, tracker)


def render_ball_counts(report, path, tracker=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(report.radii, report.counts, marker="o", label="distinct regions")
    if report.data_counts is not None:
        ax.plot(report.radii, report.data_counts, marker="s", label="data points")
    ax.set_xlabel("radius")
    ax.set_ylabel("count")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path, tracker)


def render_epsilon_trace(trace, path, tracker=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    if trace:
        steps = [s for s, _ in trace]
        eps = np.asarray([e for _, e in trace])
        for k in range(eps.shape[1]):
            ax.plot(steps, eps[:, k], label=f"eps{k}", alpha=0.9)
        ax.legend(fontsize=7)
    ax.set_xlabel("step")
    ax.set_ylabel("epsilon")
    fig.tight_layout()
    return _save(fig, path, tracker)


def render_loss_curves(records, path, tracker=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    for r, rec in enumerate(records):
        epochs = range(len(rec.train_mse))
        ax.plot(epochs, rec.train_mse, label=f"train run{r}", alpha=0.8)
        if any(v is not None for v in rec.val_mse):
            ax.plot(epochs, rec.val_mse, label=f"val run{r}", alpha=0.8, ls="--")
        if any(v is not None for v in rec.test_mse):
            ax.plot(epochs, rec.test_mse, label=f"test run{r}", alpha=0.8, ls=":")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mse")
    ax.set_yscale("log")
    ax.legend(fontsize=6)
    fig.tight_layout()
    return _save(fig, path, tracker)


def render_suite_bars(rows, path, tracker=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    names = [row.name for row in rows]
    means = [row.mean if row.mean is not None else 0.0 for row in rows]
    stds = [row.std if row.std is not None else 0.0 for row in rows]
    ax.bar(range(len(names)), means, yerr=stds, capsize=4)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20)
    ax.set_ylabel("final test mse")
    fig.tight_layout()
    return _save(fig, path, tracker)


def render_biorthogonality(values, path, tracker=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(values, bins=min(30, max(5, len(values) // 4)))
    ax.set_xlabel("residual")
    ax.set_ylabel("count")
    fig.tight_layout()
    return _save(fig, path, tracker)
