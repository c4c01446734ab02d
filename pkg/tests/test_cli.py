"""End-to-end command line flows: artifacts, determinism, error handling."""

import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from splineae import forward, model_from_dict
from splineae.artifacts import json_dumps
from splineae.cli import main
from splineae.liegroup import generators_from_dict
from splineae.network import init_model, model_to_dict

ENC = [
    {"in": 2, "out": 8, "activation": "relu"},
    {"in": 8, "out": 1, "activation": "linear"},
]
DEC = [
    {"in": 1, "out": 8, "activation": "relu"},
    {"in": 8, "out": 2, "activation": "linear"},
]


def base_doc(**over):
    doc = {
        "model": {"encoder": ENC, "decoder": DEC},
        "data": {"kind": "orbit_circle", "n": 24, "seed": 0},
        "normalization": "none",
        "train": {
            "epochs": 2,
            "batch_size": 8,
            "lr": 0.01,
            "seed": 0,
            "runs": 2,
            "val_fraction": 0.25,
            "test_fraction": 0.25,
        },
        "outputs": "outputs",
    }
    doc.update(over)
    return doc


def write_cfg(tmp_path, doc, name="exp.json"):
    p = tmp_path / name
    p.write_text(json_dumps(doc))
    return str(p)


def tree_hashes(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for f in files:
            p = os.path.join(dirpath, f)
            rel = os.path.relpath(p, root)
            with open(p, "rb") as fh:
                out[rel] = hashlib.sha256(fh.read()).hexdigest()
    return out


def test_train_writes_expected_artifacts(tmp_path, capsys):
    cfg = write_cfg(tmp_path, base_doc())
    assert main(["train", "--config", cfg]) == 0
    out = tmp_path / "outputs"
    for name in (
        "run_manifest.json",
        "model.json",
        "runrecord.jsonl",
        "metrics.csv",
        "plot_loss_curves.py",
        "loss_curves.png",
        "summary.json",
    ):
        assert (out / name).exists(), name
    assert not (out / "generators.json").exists()
    assert not (out / "epsilon_trace.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["method"] == "plain"
    assert len(summary["final_test_mse"]) == 2
    assert summary["failures"] == []
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["resolved_seed"] == 0
    assert manifest["normalization_record"] == {"mode": "none"}
    lines = [json.loads(ln) for ln in (out / "runrecord.jsonl").read_text().splitlines()]
    epochs = [ln for ln in lines if "epoch" in ln]
    summaries = [ln for ln in lines if "summary" in ln]
    assert len(epochs) == 4 and len(summaries) == 2
    assert {ln["seed"] for ln in summaries} == {0, 1}
    assert "wall_clock" not in (out / "runrecord.jsonl").read_text()
    header = (out / "metrics.csv").read_text().splitlines()[0]
    assert header == (
        "epoch,train_mse_run0,val_mse_run0,test_mse_run0,"
        "train_mse_run1,val_mse_run1,test_mse_run1"
    )
    stdout = capsys.readouterr().out
    assert "method plain" in stdout


def test_train_model_json_is_loadable_bit_exact(tmp_path):
    cfg = write_cfg(tmp_path, base_doc())
    assert main(["train", "--config", cfg]) == 0
    doc = json.loads((tmp_path / "outputs" / "model.json").read_text())
    m = model_from_dict(doc)
    assert m.input_dim == 2 and m.latent_dim == 1
    y = forward(m, np.array([0.5, -0.5])).output
    assert np.all(np.isfinite(y))


def lie1_doc():
    doc = base_doc()
    doc["train"]["reg"] = {"kind": "lie1", "weight": 0.1, "neighborhood_radius": 0.1}
    return doc


def test_train_lie1_writes_generators_and_epsilon(tmp_path):
    cfg = write_cfg(tmp_path, lie1_doc())
    assert main(["train", "--config", cfg]) == 0
    out = tmp_path / "outputs"
    gens = generators_from_dict(json.loads((out / "generators.json").read_text()))
    assert gens.h == 1 and gens.dim == 2
    assert (out / "plot_epsilon_trace.py").exists()
    assert (out / "epsilon_trace.png").exists()
    eps_lines = (out / "epsilon_trace.csv").read_text().splitlines()
    assert eps_lines[0] == "step,eps0"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["method"] == "lie1"
    best = summary["best_run"]
    records = [
        json.loads(ln)
        for ln in (out / "runrecord.jsonl").read_text().splitlines()
        if "summary" in json.loads(ln)
    ]
    trace = records[best]["summary"]["epsilon_trace"]
    assert len(eps_lines) - 1 == len(trace)


def test_train_rerun_is_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, lie1_doc())
    out1 = str(tmp_path / "a")
    out2 = str(tmp_path / "b")
    assert main(["train", "--config", cfg, "--out", out1]) == 0
    assert main(["train", "--config", cfg, "--out", out2]) == 0
    h1, h2 = tree_hashes(out1), tree_hashes(out2)
    assert h1.keys() == h2.keys()
    for name in h1:
        assert h1[name] == h2[name], name


def test_train_seed_flag_overrides_config(tmp_path):
    cfg = write_cfg(tmp_path, base_doc())
    out = str(tmp_path / "seeded")
    assert main(["train", "--config", cfg, "--out", out, "--seed", "5"]) == 0
    manifest = json.loads((tmp_path / "seeded" / "run_manifest.json").read_text())
    assert manifest["resolved_seed"] == 5
    first = json.loads((tmp_path / "seeded" / "runrecord.jsonl").read_text().splitlines()[0])
    assert first["seed"] == 5


def suite_doc():
    doc = base_doc()
    doc["methods"] = [
        {"name": "plain", "reg": None},
        {"name": "lie1", "reg": {"kind": "lie1", "weight": 0.1}},
        {"name": "denoise", "reg": {"kind": "denoise", "weight": 1.0, "corruption_std": 0.05}},
    ]
    return doc


def test_suite_outputs_and_winner(tmp_path, capsys):
    cfg = write_cfg(tmp_path, suite_doc())
    assert main(["suite", "--config", cfg]) == 0
    out = tmp_path / "outputs"
    summary = json.loads((out / "suite_summary.json").read_text())
    names = [m["name"] for m in summary["methods"]]
    assert names == ["plain", "lie1", "denoise"]
    for m in summary["methods"]:
        assert len(m["final_test_mse"]) == 2
        assert m["failures"] == []
    table = (out / "suite_table.csv").read_text().splitlines()
    assert table[0] == "dataset,plain,lie1,denoise"
    assert table[1].startswith("orbit_circle,")
    for name in names:
        assert (out / f"runrecord_{name}.jsonl").exists()
    assert (out / "suite_bars.png").exists()
    assert (out / "plot_suite.py").exists()
    means = {m["name"]: m["mean_test_mse"] for m in summary["methods"]}
    winner = min(means, key=means.get)
    model_doc = json.loads((out / "model.json").read_text())
    assert model_from_dict(model_doc).input_dim == 2
    has_gens = (out / "generators.json").exists()
    assert has_gens == (winner == "lie1")
    stdout = capsys.readouterr().out
    for name in names:
        assert name in stdout


def test_suite_parallel_matches_serial_bytes(tmp_path):
    cfg = write_cfg(tmp_path, suite_doc())
    out1 = str(tmp_path / "serial")
    out2 = str(tmp_path / "parallel")
    assert main(["suite", "--config", cfg, "--out", out1]) == 0
    assert main(["suite", "--config", cfg, "--out", out2, "--workers", "3"]) == 0
    h1, h2 = tree_hashes(out1), tree_hashes(out2)
    assert h1 == h2


def test_suite_requires_methods(tmp_path):
    cfg = write_cfg(tmp_path, base_doc())
    code = main(["suite", "--config", cfg])
    assert code == 2
    err = json.loads((tmp_path / "outputs" / "error.json").read_text())
    assert err["exit_code"] == 2
    assert "methods" in err["message"]


def test_bad_config_json_exits_2(tmp_path, monkeypatch):
    p = tmp_path / "broken.json"
    p.write_text("{oops")
    monkeypatch.chdir(tmp_path)
    assert main(["train", "--config", str(p)]) == 2
    err = json.loads((tmp_path / "error.json").read_text())
    assert err["error"] == "ConfigError"


@pytest.mark.filterwarnings("ignore:overflow")
def test_divergent_training_exits_4(tmp_path):
    X = np.full((24, 2), 1e200)
    X[::2] *= -1.0
    csv = tmp_path / "huge.csv"
    lines = "\n".join(",".join(repr(float(v)) for v in row) for row in X)
    csv.write_text(lines + "\n")
    doc = base_doc(data={"kind": "csv", "path": "huge.csv"}, normalization="none")
    cfg = write_cfg(tmp_path, doc)
    code = main(["train", "--config", cfg])
    assert code == 4
    out = tmp_path / "outputs"
    err = json.loads((out / "error.json").read_text())
    assert err["error"] == "DivergenceError"
    assert not (out / "model.json").exists()
    assert not (out / "metrics.csv").exists()


def model_file(tmp_path, enc_dims=(2, 16, 2), name="model.json"):
    from splineae.network import LayerSpec

    enc = [LayerSpec(enc_dims[0], enc_dims[1], "relu"), LayerSpec(enc_dims[1], enc_dims[2], "linear")]
    dec = [LayerSpec(enc_dims[2], enc_dims[1], "relu"), LayerSpec(enc_dims[1], enc_dims[0], "linear")]
    m = init_model(enc, dec, 0)
    p = tmp_path / name
    p.write_text(json_dumps(model_to_dict(m)))
    return str(p), m


def test_analyze_partition2d_outputs(tmp_path, capsys):
    model_path, _ = model_file(tmp_path)
    out = str(tmp_path / "an")
    code = main(
        ["analyze", "--model", model_path, "--kind", "partition2d", "--out", out, "--resolution", "32"]
    )
    assert code == 0
    grid = (tmp_path / "an" / "partition_grid.csv").read_text().splitlines()
    assert len(grid) == 32 and len(grid[0].split(",")) == 32
    legend = json.loads((tmp_path / "an" / "partition_legend.json").read_text())
    n_ids = max(int(v) for row in grid for v in row.split(",")) + 1
    assert len(legend["legend"]) == n_ids
    assert len(legend["xs"]) == 32 and len(legend["ys"]) == 32
    assert (tmp_path / "an" / "partition2d.png").exists()
    assert "regions" in capsys.readouterr().out


def test_analyze_partition2d_plot_script_runs(tmp_path):
    model_path, _ = model_file(tmp_path)
    out = str(tmp_path / "an")
    assert (
        main(["analyze", "--model", model_path, "--kind", "partition2d", "--out", out, "--resolution", "16"])
        == 0
    )
    proc = subprocess.run(
        [sys.executable, os.path.join(out, "plot_partition2d.py")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert os.path.exists(os.path.join(out, "partition2d_replot.png"))


def test_analyze_surface_and_wrong_dim(tmp_path):
    model3, _ = model_file(tmp_path, enc_dims=(3, 16, 2), name="m3.json")
    out = str(tmp_path / "surf")
    assert (
        main(["analyze", "--model", model3, "--kind", "surface", "--out", out, "--resolution", "8"]) == 0
    )
    rows = (tmp_path / "surf" / "surface.csv").read_text().splitlines()
    assert rows[0] == "x,y,z,region_id"
    assert len(rows) == 65
    legend = json.loads((tmp_path / "surf" / "surface_legend.json").read_text())
    assert legend["shape"] == [8, 8]
    model2, _ = model_file(tmp_path, name="m2.json")
    bad = str(tmp_path / "surf_bad")
    assert main(["analyze", "--model", model2, "--kind", "surface", "--out", bad]) == 5
    left = set(os.listdir(bad))
    assert left == {"error.json"}


def test_analyze_ball_counts_with_data(tmp_path):
    model_path, _ = model_file(tmp_path)
    data = tmp_path / "pts.csv"
    data.write_text("0.0,0.0\n0.3,0.0\n4.0,4.0\n")
    out = str(tmp_path / "balls")
    code = main(
        [
            "analyze",
            "--model",
            model_path,
            "--kind",
            "ball_counts",
            "--out",
            out,
            "--radii",
            "0.5,1.0",
            "--probes",
            "256",
            "--data",
            str(data),
        ]
    )
    assert code == 0
    rep = json.loads((tmp_path / "balls" / "ball_counts.json").read_text())
    assert rep["radii"] == [0.5, 1.0]
    assert len(rep["counts"]) == 2
    assert rep["counts"][0] <= rep["counts"][1]
    assert rep["data_counts"] == [2, 2]
    assert rep["probe_budget"] == 256


def test_analyze_biorthogonality(tmp_path):
    model_path, _ = model_file(tmp_path)
    out = str(tmp_path / "bio")
    assert (
        main(["analyze", "--model", model_path, "--kind", "biorthogonality", "--out", out, "--samples", "20"])
        == 0
    )
    rep = json.loads((tmp_path / "bio" / "biorthogonality.json").read_text())
    assert rep["count"] == 20 and len(rep["values"]) == 20
    assert rep["min"] <= rep["mean"] <= rep["max"]
    assert (tmp_path / "bio" / "biorthogonality.png").exists()


def test_analyze_epsilon_trace_from_runrecord(tmp_path):
    cfg = write_cfg(tmp_path, lie1_doc())
    assert main(["train", "--config", cfg]) == 0
    out = tmp_path / "outputs"
    trace_out = str(tmp_path / "eps")
    code = main(
        [
            "analyze",
            "--model",
            str(out / "model.json"),
            "--kind",
            "epsilon_trace",
            "--out",
            trace_out,
            "--record",
            str(out / "runrecord.jsonl"),
            "--run",
            "0",
        ]
    )
    assert code == 0
    produced = (tmp_path / "eps" / "epsilon_trace.csv").read_text()
    assert produced.splitlines()[0] == "step,eps0"
    summary = json.loads((out / "summary.json").read_text())
    if summary["best_run"] == 0:
        assert produced == (out / "epsilon_trace.csv").read_text()


def test_analyze_epsilon_trace_requires_record(tmp_path):
    model_path, _ = model_file(tmp_path)
    out = str(tmp_path / "eps2")
    assert main(["analyze", "--model", model_path, "--kind", "epsilon_trace", "--out", out]) == 2


def test_analyze_rejects_bad_model_files(tmp_path):
    out = str(tmp_path / "bad")
    missing = str(tmp_path / "nope.json")
    assert main(["analyze", "--model", missing, "--kind", "partition2d", "--out", out]) == 3
    corrupt = tmp_path / "corrupt.json"
    corrupt.write_text("{oops")
    assert main(["analyze", "--model", str(corrupt), "--kind", "partition2d", "--out", out]) == 3
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json_dumps({"format": "other"}))
    assert main(["analyze", "--model", str(wrong), "--kind", "partition2d", "--out", out]) == 3


def test_gen_data_control_chart_reproducible(tmp_path):
    out1 = str(tmp_path / "cc1.csv")
    out2 = str(tmp_path / "cc2.csv")
    argv = ["gen-data", "--kind", "control_chart", "--params", '{"n_per_class": 3, "d": 60}']
    assert main(argv + ["--out", out1, "--seed", "4"]) == 0
    assert main(argv + ["--out", out2, "--seed", "4"]) == 0
    b1 = open(out1, "rb").read()
    assert b1 == open(out2, "rb").read()
    lines = b1.decode().splitlines()
    assert len(lines) == 18
    labels = [int(ln.split(",")[0]) for ln in lines]
    assert sorted(set(labels)) == [0, 1, 2, 3, 4, 5]
    assert len(lines[0].split(",")) == 61


def test_gen_data_orbit_circle_unit_rows(tmp_path):
    out = str(tmp_path / "orbit.csv")
    assert main(["gen-data", "--kind", "orbit_circle", "--out", out, "--params", '{"n": 12}']) == 0
    rows = [[float(c) for c in ln.split(",")] for ln in open(out).read().splitlines()]
    X = np.asarray(rows)
    assert X.shape == (12, 2)
    assert np.abs(np.linalg.norm(X, axis=1) - 1.0).max() <= 1e-12


def test_gen_data_validates_params(tmp_path):
    out = str(tmp_path / "x.csv")
    assert main(["gen-data", "--kind", "orbit_blocks", "--out", out, "--params", '{"d": 3}']) == 2
    assert not os.path.exists(out)
    assert main(["gen-data", "--kind", "orbit_circle", "--out", out, "--params", "[1]"]) == 2
    assert main(["gen-data", "--kind", "orbit_circle", "--out", out, "--params", "{bad"]) == 2
