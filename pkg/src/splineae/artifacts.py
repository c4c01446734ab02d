"""Artifact writers: metrics JSONL, suite tables, analysis exports, and the
standalone plotting scripts that accompany each delimited export.

Every float is printed with its shortest round-trip representation, and no
wall-clock quantity is ever written, so reruns with the same seed and config
produce byte-identical files.
"""

import json
import os

import numpy as np

__all__ = [
    "json_dumps",
    "write_ball_report",
    "write_epsilon_csv",
    "write_json",
    "write_metrics_csv",
    "write_raster",
    "write_runrecords_jsonl",
    "write_suite_outputs",
    "write_surface",
    "write_text",
]


def json_dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_text(path, text, tracker=None):
    if tracker is not None:
        tracker.add(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def write_json(path, obj, tracker=None):
    return write_text(path, json_dumps(obj), tracker)


def _f(x):
    return None if x is None else float(x)


def record_lines(record, run_idx):
    """One JSON dict per epoch plus a trailing summary dict."""
    lines = []
    for e in range(len(record.train_mse)):
        lines.append(
            {
                "run": run_idx,
                "seed": record.seed,
                "epoch": e,
                "train_mse": _f(record.train_mse[e]),
                "val_mse": _f(record.val_mse[e]),
                "test_mse": _f(record.test_mse[e]),
            }
        )
    lines.append(
        {
            "run": run_idx,
            "seed": record.seed,
            "summary": {
                "best_epoch": record.best_epoch,
                "final_test_mse": _f(record.final_test_mse),
                "diverged": record.diverged,
                "error": record.error,
                "epsilon_trace": [
                    [int(s), [float(e) for e in eps]] for s, eps in record.epsilon_trace
                ],
            },
        }
    )
    return lines


def write_runrecords_jsonl(path, records, tracker=None):
    chunks = []
    for r, rec in enumerate(records):
        for line in record_lines(rec, r):
            chunks.append(json.dumps(line, sort_keys=True))
    return write_text(path, "\n".join(chunks) + "\n", tracker)


def write_metrics_csv(path, records, tracker=None):
    """Per-epoch MSE table: one column triple per run."""
    n_epochs = max(len(r.train_mse) for r in records)
    header = ["epoch"]
    for r in range(len(records)):
        header += [f"train_mse_run{r}", f"val_mse_run{r}", f"test_mse_run{r}"]
    lines = [",".join(header)]
    for e in range(n_epochs):
        cells = [str(e)]
        for rec in records:
            for series in (rec.train_mse, rec.val_mse, rec.test_mse):
                v = series[e] if e < len(series) else None
                cells.append("" if v is None else repr(float(v)))
        lines.append(",".join(cells))
    return write_text(path, "\n".join(lines) + "\n", tracker)


def suite_rows_to_dict(rows):
    return {
        "methods": [
            {
                "name": row.name,
                "mean_test_mse": _f(row.mean),
                "std_test_mse": _f(row.std),
                "final_test_mse": [_f(v) for v in row.finals],
                "failures": [
                    {"seed": int(s), "message": m} for s, m in row.failures
                ],
            }
            for row in rows
        ]
    }


def write_suite_outputs(out_dir, rows, dataset_name="dataset", tracker=None):
    """suite_summary.json plus a one-row CSV: columns are methods."""
    summary = write_json(
        os.path.join(out_dir, "suite_summary.json"), suite_rows_to_dict(rows), tracker
    )
    header = ["dataset"] + [row.name for row in rows]
    cells = [dataset_name]
    for row in rows:
        if row.mean is None:
            cells.append("failed")
        else:
            cells.append(f"{row.mean!r}±{row.std!r}")
    table = write_text(
        os.path.join(out_dir, "suite_table.csv"),
        ",".join(header) + "\n" + ",".join(cells) + "\n",
        tracker,
    )
    return summary, table


def write_ball_report(path, report, tracker=None):
    obj = {
        "center": [float(v) for v in report.center],
        "radii": [float(r) for r in report.radii],
        "counts": [int(c) for c in report.counts],
        "data_counts": None
        if report.data_counts is None
        else [int(c) for c in report.data_counts],
        "probe_budget": int(report.probe_budget),
    }
    return write_json(path, obj, tracker)


def write_raster(out_dir, raster, tracker=None):
    """Integer region-id grid CSV plus JSON legend mapping id -> mask string."""
    grid_path = os.path.join(out_dir, "partition_grid.csv")
    lines = [",".join(str(int(v)) for v in row) for row in raster.ids]
    write_text(grid_path, "\n".join(lines) + "\n", tracker)
    legend = {
        "legend": list(raster.legend),  # index = region id
        "xs": [float(v) for v in raster.xs],
        "ys": [float(v) for v in raster.ys],
    }
    legend_path = write_json(os.path.join(out_dir, "partition_legend.json"), legend, tracker)
    return grid_path, legend_path


def write_surface(out_dir, mesh, tracker=None):
    """Vertex rows x,y,z,region_id for an h=2 -> d=3 decoder mesh."""
    path = os.path.join(out_dir, "surface.csv")
    lines = ["x,y,z,region_id"]
    for v, rid in zip(mesh.vertices, mesh.ids):
        lines.append(",".join(repr(float(c)) for c in v) + f",{int(rid)}")
    write_text(path, "\n".join(lines) + "\n", tracker)
    legend = {
        "legend": list(mesh.legend),  # index = region id
        "z1": [float(v) for v in mesh.z1],
        "z2": [float(v) for v in mesh.z2],
        "shape": [int(s) for s in mesh.shape],
    }
    legend_path = write_json(os.path.join(out_dir, "surface_legend.json"), legend, tracker)
    return path, legend_path


def write_epsilon_csv(path, trace, tracker=None):
    if not trace:
        return write_text(path, "step\n", tracker)
    h = len(trace[0][1])
    header = "step," + ",".join(f"eps{k}" for k in range(h))
    lines = [header]
    for step, eps in trace:
        lines.append(str(int(step)) + "," + ",".join(repr(float(e)) for e in eps))
    return write_text(path, "\n".join(lines) + "\n", tracker)


_SCRIPT_HEADER = """#!/usr/bin/env python3
# Standalone renderer for the data files written next to this script.
import csv
import json
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
"""


def partition_plot_script():
    return _SCRIPT_HEADER + """
ids = np.loadtxt(os.path.join(HERE, "partition_grid.csv"), delimiter=",", dtype=int)
with open(os.path.join(HERE, "partition_legend.json")) as fh:
    meta = json.load(fh)
xs, ys = meta["xs"], meta["ys"]
fig, ax = plt.subplots(figsize=(6, 6))
ax.imshow(ids, origin="lower", extent=[xs[0], xs[-1], ys[0], ys[-1]],
          cmap="tab20", interpolation="nearest")
ax.set_xlabel("x1")
ax.set_ylabel("x2")
ax.set_title(f"{ids.max() + 1} regions")
fig.savefig(os.path.join(HERE, "partition2d_replot.png"), dpi=150)
print("wrote partition2d_replot.png")
"""


def surface_plot_script():
    return _SCRIPT_HEADER + """
rows = np.loadtxt(os.path.join(HERE, "surface.csv"), delimiter=",", skiprows=1)
xyz, ids = rows[:, :3], rows[:, 3].astype(int)
fig = plt.figure(figsize=(7, 6))
ax = fig.add_subplot(projection="3d")
ax.scatter(xyz[:, 0], xyz[:, 1], xyz[:, 2], c=ids, cmap="tab20", s=4)
ax.set_xlabel("x")
ax.set_ylabel("y")
ax.set_zlabel("z")
fig.savefig(os.path.join(HERE, "surface_replot.png"), dpi=150)
print("wrote surface_replot.png")
"""


def ball_plot_script():
    return _SCRIPT_HEADER + """
with open(os.path.join(HERE, "ball_counts.json")) as fh:
    rep = json.load(fh)
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(rep["radii"], rep["counts"], marker="o", label="distinct regions")
if rep.get("data_counts"):
    ax.plot(rep["radii"], rep["data_counts"], marker="s", label="data points")
ax.set_xlabel("radius")
ax.set_ylabel("count")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "ball_counts_replot.png"), dpi=150)
print("wrote ball_counts_replot.png")
"""


def epsilon_plot_script():
    return _SCRIPT_HEADER + """
rows = []
with open(os.path.join(HERE, "epsilon_trace.csv")) as fh:
    reader = csv.reader(fh)
    header = next(reader)
    for row in reader:
        rows.append([float(c) for c in row])
rows = np.asarray(rows) if rows else np.zeros((0, len(header)))
fig, ax = plt.subplots(figsize=(6, 4))
for k in range(1, rows.shape[1] if rows.size else 1):
    ax.plot(rows[:, 0], rows[:, k], label=header[k])
ax.set_xlabel("step")
ax.set_ylabel("epsilon")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "epsilon_trace_replot.png"), dpi=150)
print("wrote epsilon_trace_replot.png")
"""


def curves_plot_script():
    return _SCRIPT_HEADER + """
with open(os.path.join(HERE, "metrics.csv")) as fh:
    reader = csv.reader(fh)
    header = next(reader)
    rows = [[float(c) if c else float("nan") for c in row] for row in reader]
rows = np.asarray(rows)
fig, ax = plt.subplots(figsize=(6, 4))
for j, name in enumerate(header[1:], start=1):
    ax.plot(rows[:, 0], rows[:, j], label=name, alpha=0.8)
ax.set_xlabel("epoch")
ax.set_ylabel("mse")
ax.set_yscale("log")
ax.legend(fontsize=6)
fig.tight_layout()
fig.savefig(os.path.join(HERE, "loss_curves_replot.png"), dpi=150)
print("wrote loss_curves_replot.png")
"""


def biorthogonality_plot_script():
    return _SCRIPT_HEADER + """
with open(os.path.join(HERE, "biorthogonality.json")) as fh:
    rep = json.load(fh)
values = rep["values"]
fig, ax = plt.subplots(figsize=(6, 4))
ax.hist(values, bins=min(30, max(5, len(values) // 4)))
ax.set_xlabel("residual")
ax.set_ylabel("count")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "biorthogonality_replot.png"), dpi=150)
print("wrote biorthogonality_replot.png")
"""


def suite_plot_script():
    return _SCRIPT_HEADER + """
with open(os.path.join(HERE, "suite_summary.json")) as fh:
    summary = json.load(fh)
names = [m["name"] for m in summary["methods"]]
means = [m["mean_test_mse"] for m in summary["methods"]]
stds = [m["std_test_mse"] or 0.0 for m in summary["methods"]]
fig, ax = plt.subplots(figsize=(6, 4))
ax.bar(range(len(names)), means, yerr=stds, capsize=4)
ax.set_xticks(range(len(names)), names, rotation=20)
ax.set_ylabel("final test mse")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "suite_bars_replot.png"), dpi=150)
print("wrote suite_bars_replot.png")
"""
