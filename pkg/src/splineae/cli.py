"""Command line interface: train, suite, analyze, gen-data.

Exit codes: 0 success, 2 config error, 3 ingestion error, 4 numeric
divergence, 5 internal contract violation. A failed command removes the
files it had started writing and leaves an error.json in the output
directory instead.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import artifacts, plots
from .config import _orbit_features, build_dataset, load_config, parse_experiment
from .cpa import biorthogonality_residual
from .data import gen_control_chart, split_dataset, write_csv
from .errors import ConfigError, ContractError, DivergenceError, IngestionError, SplineaeError
from .liegroup import generators_from_dict
from .network import model_from_dict
from .numerics.rng import make_rng
from .partition import count_regions_in_ball, export_decoder_surface, rasterize_partition_2d
from .trainer import SuiteEntry, run_suite

__all__ = ["main"]


class Tracker:
    """Remembers files written by the running command so a failure can
    remove partial outputs."""

    def __init__(self):
        self.paths = []
        self.out_dir = None

    def add(self, path):
        self.paths.append(path)
        return path


def _floats(text, name, count=None):
    try:
        vals = [float(c) for c in str(text).split(",") if c.strip() != ""]
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ConfigError(f"{name}: expected {count} numbers, got {len(vals)}")
    return vals


def _load_model(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IngestionError(f"cannot read model {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IngestionError(f"model {path} is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def _resolve_run_context(args, tracker):
    doc = load_config(args.config)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    cfg = parse_experiment(doc, base_dir)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, train=replace(cfg.train, seed=args.seed))
    out = args.out if args.out else cfg.outputs
    if not os.path.isabs(out):
        out = os.path.join(base_dir, out) if not args.out else os.path.abspath(out)
    os.makedirs(out, exist_ok=True)
    tracker.out_dir = out
    X, labels, norm = build_dataset(cfg)
    split = split_dataset(X, cfg.train.val_fraction, cfg.train.test_fraction, cfg.train.seed)
    return doc, cfg, out, split, norm


def _pick_best_run(row):
    order = sorted(
        range(len(row.records)),
        key=lambda i: (
            float("inf") if row.finals[i] is None else row.finals[i],
            i,
        ),
    )
    return order[0]


def _raise_all_failed(row):
    msg = f"all {len(row.failures)} runs failed; first: {row.failures[0][1]}"
    if row.failures[0][1].startswith("DivergenceError"):
        raise DivergenceError(msg)
    raise SplineaeError(msg)


def _write_manifest(out, doc, cfg, norm, tracker):
    manifest = {
        "config": doc,
        "resolved_seed": cfg.train.seed,
        "normalization_record": norm.to_dict(),
    }
    return artifacts.write_json(os.path.join(out, "run_manifest.json"), manifest, tracker)


def cmd_train(args, tracker):
    doc, cfg, out, split, norm = _resolve_run_context(args, tracker)
    name = cfg.train.reg.kind if cfg.train.reg.weight > 0 else "plain"
    entry = SuiteEntry(name, cfg.encoder_specs, cfg.decoder_specs, cfg.train)
    row = run_suite([entry], split)[0]
    if not row.records:
        _raise_all_failed(row)
    best = _pick_best_run(row)
    _write_manifest(out, doc, cfg, norm, tracker)
    artifacts.write_json(os.path.join(out, "model.json"), row.models[best], tracker)
    if row.gens[best] is not None:
        artifacts.write_json(os.path.join(out, "generators.json"), row.gens[best], tracker)
    artifacts.write_runrecords_jsonl(os.path.join(out, "runrecord.jsonl"), row.records, tracker)
    artifacts.write_metrics_csv(os.path.join(out, "metrics.csv"), row.records, tracker)
    artifacts.write_text(
        os.path.join(out, "plot_loss_curves.py"), artifacts.curves_plot_script(), tracker
    )
    plots.render_loss_curves(row.records, os.path.join(out, "loss_curves.png"), tracker)
    trace = row.records[best].epsilon_trace
    if trace:
        artifacts.write_epsilon_csv(os.path.join(out, "epsilon_trace.csv"), trace, tracker)
        artifacts.write_text(
            os.path.join(out, "plot_epsilon_trace.py"),
            artifacts.epsilon_plot_script(),
            tracker,
        )
        plots.render_epsilon_trace(trace, os.path.join(out, "epsilon_trace.png"), tracker)
    summary = {
        "method": row.name,
        "mean_test_mse": row.mean,
        "std_test_mse": row.std,
        "final_test_mse": row.finals,
        "best_run": best,
        "best_epoch": row.records[best].best_epoch,
        "failures": [{"seed": int(s), "message": m} for s, m in row.failures],
    }
    artifacts.write_json(os.path.join(out, "summary.json"), summary, tracker)
    print(f"method {row.name}: mean test mse {row.mean} over {len(row.records)} run(s)")
    print(f"artifacts in {out}")


def cmd_suite(args, tracker):
    doc, cfg, out, split, norm = _resolve_run_context(args, tracker)
    if not cfg.methods:
        raise ConfigError("config.methods: suite needs a nonempty methods list")
    entries = [
        SuiteEntry(name, cfg.encoder_specs, cfg.decoder_specs, replace(cfg.train, reg=reg))
        for name, reg in cfg.methods
    ]
    rows = run_suite(entries, split, workers=args.workers)
    _write_manifest(out, doc, cfg, norm, tracker)
    data_kind = cfg.data.get("kind", "dataset")
    dataset_name = (
        os.path.basename(cfg.data["path"]) if data_kind == "csv" else data_kind
    )
    artifacts.write_suite_outputs(out, rows, dataset_name, tracker)
    for row in rows:
        artifacts.write_runrecords_jsonl(
            os.path.join(out, f"runrecord_{row.name}.jsonl"), row.records, tracker
        )
    artifacts.write_text(os.path.join(out, "plot_suite.py"), artifacts.suite_plot_script(), tracker)
    plots.render_suite_bars(rows, os.path.join(out, "suite_bars.png"), tracker)
    scored = [r for r in rows if r.mean is not None]
    if not scored:
        _raise_all_failed(rows[0])
    winner = min(scored, key=lambda r: r.mean)
    best = _pick_best_run(winner)
    artifacts.write_json(os.path.join(out, "model.json"), winner.models[best], tracker)
    if winner.gens[best] is not None:
        artifacts.write_json(os.path.join(out, "generators.json"), winner.gens[best], tracker)
    for row in rows:
        mean = "failed" if row.mean is None else f"{row.mean:.6g}±{row.std:.3g}"
        print(f"{row.name}: {mean} ({len(row.records)}/{len(row.finals) + len(row.failures)} runs ok)")
    print(f"artifacts in {out}")


def _analyze_partition2d(model, args, out, tracker):
    bounds = _floats(args.bounds or "-2,2,-2,2", "--bounds", 4)
    raster = rasterize_partition_2d(model, tuple(bounds), args.resolution or 256)
    artifacts.write_raster(out, raster, tracker)
    artifacts.write_text(
        os.path.join(out, "plot_partition2d.py"), artifacts.partition_plot_script(), tracker
    )
    plots.render_partition(raster, os.path.join(out, "partition2d.png"), tracker)
    print(f"{int(raster.ids.max()) + 1} regions on a {raster.ids.shape} grid")


def _analyze_surface(model, args, out, tracker):
    if model.input_dim != 3:
        raise ContractError("surface export needs a model with output dim 3")
    bounds = _floats(args.bounds or "-2,2,-2,2", "--bounds", 4)
    mesh = export_decoder_surface(model, tuple(bounds), args.resolution or 64)
    artifacts.write_surface(out, mesh, tracker)
    artifacts.write_text(
        os.path.join(out, "plot_surface.py"), artifacts.surface_plot_script(), tracker
    )
    plots.render_surface(mesh, os.path.join(out, "surface.png"), tracker)
    print(f"{len(set(mesh.ids.tolist()))} decoder regions over {len(mesh.vertices)} vertices")


def _analyze_ball_counts(model, args, out, tracker):
    d = model.input_dim
    center = np.zeros(d) if not args.center else np.asarray(_floats(args.center, "--center", d))
    radii = _floats(args.radii or "0.125,0.25,0.5,1,2", "--radii")
    data = None
    if args.data:
        from .data import load_csv

        data = load_csv(args.data, args.has_label_column).features
    report = count_regions_in_ball(
        model, center, radii, args.probes or 4096, make_rng(args.seed or 0, 8), data
    )
    artifacts.write_ball_report(os.path.join(out, "ball_counts.json"), report, tracker)
    artifacts.write_text(
        os.path.join(out, "plot_ball_counts.py"), artifacts.ball_plot_script(), tracker
    )
    plots.render_ball_counts(report, os.path.join(out, "ball_counts.png"), tracker)
    print(f"counts {report.counts} at radii {report.radii}")


def _analyze_biorthogonality(model, args, out, tracker):
    n = args.samples or 100
    rng = make_rng(args.seed or 0, 9)
    values = []
    for _ in range(n):
        x = rng.standard_normal(model.input_dim)
        values.append(float(biorthogonality_residual(model, x)))
    rep = {
        "count": n,
        "mean": float(np.mean(values)),
        "max": float(np.max(values)),
        "min": float(np.min(values)),
        "values": values,
    }
    artifacts.write_json(os.path.join(out, "biorthogonality.json"), rep, tracker)
    artifacts.write_text(
        os.path.join(out, "plot_biorthogonality.py"),
        artifacts.biorthogonality_plot_script(),
        tracker,
    )
    plots.render_biorthogonality(values, os.path.join(out, "biorthogonality.png"), tracker)
    print(f"biorthogonality residual over {n} samples: mean {rep['mean']:.3e} max {rep['max']:.3e}")


def _analyze_epsilon_trace(model, args, out, tracker):
    if not args.record:
        raise ConfigError("--record: epsilon_trace needs a runrecord.jsonl path")
    try:
        with open(args.record, "r", encoding="utf-8") as fh:
            lines = [json.loads(ln) for ln in fh if ln.strip()]
    except OSError as exc:
        raise IngestionError(f"cannot read record {args.record}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IngestionError(f"record {args.record} is not valid JSONL: {exc}") from exc
    run = args.run or 0
    trace = None
    for line in lines:
        if line.get("run") == run and "summary" in line:
            trace = [(int(s), [float(v) for v in eps]) for s, eps in line["summary"]["epsilon_trace"]]
    if trace is None:
        raise IngestionError(f"record has no summary line for run {run}")
    artifacts.write_epsilon_csv(os.path.join(out, "epsilon_trace.csv"), trace, tracker)
    artifacts.write_text(
        os.path.join(out, "plot_epsilon_trace.py"), artifacts.epsilon_plot_script(), tracker
    )
    plots.render_epsilon_trace(trace, os.path.join(out, "epsilon_trace.png"), tracker)
    print(f"{len(trace)} epsilon solves for run {run}")


_ANALYZE_KINDS = {
    "partition2d": _analyze_partition2d,
    "surface": _analyze_surface,
    "ball_counts": _analyze_ball_counts,
    "biorthogonality": _analyze_biorthogonality,
    "epsilon_trace": _analyze_epsilon_trace,
}


def cmd_analyze(args, tracker):
    model = _load_model(args.model)
    out = args.out or "analysis"
    os.makedirs(out, exist_ok=True)
    tracker.out_dir = out
    _ANALYZE_KINDS[args.kind](model, args, out, tracker)
    print(f"artifacts in {out}")


def cmd_gen_data(args, tracker):
    try:
        params = json.loads(args.params) if args.params else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--params is not valid JSON: {exc}") from exc
    if not isinstance(params, dict):
        raise ConfigError("--params must be a JSON object")
    if args.seed is not None:
        params["seed"] = args.seed
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    tracker.out_dir = out_dir
    if args.kind == "control_chart":
        X, labels = gen_control_chart(
            int(params.get("n_per_class", 100)),
            int(params.get("d", 60)),
            int(params.get("seed", 0)),
        )
        tracker.add(args.out)
        write_csv(args.out, X, labels)
    else:
        d = 2 if args.kind == "orbit_circle" else int(params.get("d", 0))
        if args.kind == "orbit_blocks" and (d < 2 or d % 2 != 0):
            raise ConfigError("--params.d: block rotations need even d >= 2")
        X, _ = _orbit_features(dict(params), "--params", d)
        tracker.add(args.out)
        write_csv(args.out, X)
    print(f"wrote {len(X)} rows x {X.shape[1]} features to {args.out}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="splineae",
        description="Train, compare, and dissect piecewise-affine autoencoders.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("train", help="train one method from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override the config outputs directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("suite", help="train every configured method and tabulate")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_suite)

    p = sub.add_parser("analyze", help="export diagnostics for a serialized model")
    p.add_argument("--model", required=True)
    p.add_argument("--kind", required=True, choices=sorted(_ANALYZE_KINDS))
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--bounds", default=None, help="xmin,xmax,ymin,ymax")
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--center", default=None, help="comma-separated center point")
    p.add_argument("--radii", default=None, help="comma-separated ball radii")
    p.add_argument("--probes", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--data", default=None, help="CSV whose rows are counted per ball")
    p.add_argument("--has-label-column", action="store_true")
    p.add_argument("--record", default=None, help="runrecord.jsonl for epsilon_trace")
    p.add_argument("--run", type=int, default=None)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("gen-data", help="write a synthetic dataset CSV")
    p.add_argument("--kind", required=True, choices=["orbit_circle", "orbit_blocks", "control_chart"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--params", default=None, help="JSON object of generator parameters")
    p.set_defaults(fn=cmd_gen_data)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    tracker = Tracker()
    try:
        args.fn(args, tracker)
        return 0
    except SplineaeError as exc:
        for p in reversed(tracker.paths):
            if os.path.isfile(p):
                try:
                    os.remove(p)
                except OSError:
                    pass
        out = tracker.out_dir or getattr(args, "out", None) or "."
        try:
            os.makedirs(out, exist_ok=True)
            payload = {
                "error": type(exc).__name__,
                "message": str(exc),
                "exit_code": exc.exit_code,
            }
            with open(os.path.join(out, "error.json"), "w", encoding="utf-8") as fh:
                fh.write(artifacts.json_dumps(payload))
        except OSError:
            pass
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
