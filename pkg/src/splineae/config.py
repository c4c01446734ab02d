"""Experiment configuration: a single JSON document, hand-validated with
errors that name the offending path."""

import json
import os
from dataclasses import dataclass, replace

import numpy as np

from .data import DatasetTable, gen_control_chart, load_csv, normalize
from .errors import ConfigError
from .liegroup import OrbitSpec, gen_orbit_dataset, make_named_generator
from .network import LayerSpec
from .numerics.rng import make_rng
from .regularizers import REG_KINDS, RegConfig
from .trainer import TrainConfig

__all__ = [
    "ExperimentConfig",
    "build_dataset",
    "load_config",
    "parse_experiment",
]

_ACTIVATIONS = ("relu", "leaky_relu", "absolute", "linear")
_NORMS = ("minmax01", "zscore", "none")
_DATA_KINDS = ("csv", "orbit_circle", "orbit_blocks", "control_chart")


@dataclass
class ExperimentConfig:
    encoder_specs: list
    decoder_specs: list
    data: dict
    normalization: str
    train: TrainConfig
    outputs: str
    methods: list  # [(name, RegConfig)] for suites; empty for single runs
    base_dir: str = "."


def _need(doc, key, path, kind=None):
    if key not in doc:
        raise ConfigError(f"{path}.{key}: missing")
    v = doc[key]
    if kind is not None and not isinstance(v, kind):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {type(v).__name__}")
    return v


def _num(doc, key, path, default=None):
    if key not in doc:
        if default is None:
            raise ConfigError(f"{path}.{key}: missing")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    return v


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def _parse_layers(items, path):
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{path}: expected a nonempty list of layers")
    specs = []
    for i, item in enumerate(items):
        p = f"{path}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{p}: expected an object")
        act = item.get("activation", "relu")
        if act not in _ACTIVATIONS:
            raise ConfigError(f"{p}.activation: unknown {act!r}")
        try:
            specs.append(
                LayerSpec(
                    int(_num(item, "in", p)),
                    int(_num(item, "out", p)),
                    act,
                    float(_num(item, "slope", p, 0.01)),
                )
            )
        except ConfigError as exc:
            raise ConfigError(f"{p}: {exc}") from None
    for i in range(len(specs) - 1):
        if specs[i].out_dim != specs[i + 1].in_dim:
            raise ConfigError(
                f"{path}[{i}].out ({specs[i].out_dim}) != {path}[{i+1}].in ({specs[i+1].in_dim})"
            )
    return specs


def _parse_reg(item, path):
    if item is None:
        return RegConfig()
    if not isinstance(item, dict):
        raise ConfigError(f"{path}: expected an object")
    kind = item.get("kind", "none")
    if kind not in REG_KINDS:
        raise ConfigError(f"{path}.kind: unknown {kind!r}, choose from {sorted(REG_KINDS)}")
    try:
        return RegConfig(
            kind=kind,
            weight=float(_num(item, "weight", path, 0.0)),
            neighborhood_radius=float(_num(item, "neighborhood_radius", path, 0.1)),
            hessian_sigma=float(_num(item, "hessian_sigma", path, 0.01)),
            hessian_count=int(_num(item, "hessian_count", path, 4)),
            corruption_std=float(_num(item, "corruption_std", path, 0.0)),
            ridge=float(_num(item, "ridge", path, 1e-8)),
        )
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _parse_train(item, path):
    if not isinstance(item, dict):
        raise ConfigError(f"{path}: expected an object")
    betas = item.get("adam_betas", [0.9, 0.999])
    if not (isinstance(betas, list) and len(betas) == 2):
        raise ConfigError(f"{path}.adam_betas: expected [b1, b2]")
    try:
        return TrainConfig(
            epochs=int(_num(item, "epochs", path, 125)),
            batch_size=int(_num(item, "batch_size", path, 16)),
            lr=float(_num(item, "lr", path, 1e-3)),
            adam_betas=(float(betas[0]), float(betas[1])),
            adam_eps=float(_num(item, "adam_eps", path, 1e-8)),
            reg=_parse_reg(item.get("reg"), f"{path}.reg"),
            seed=int(_num(item, "seed", path, 0)),
            runs=int(_num(item, "runs", path, 1)),
            val_fraction=float(_num(item, "val_fraction", path, 0.2)),
            test_fraction=float(_num(item, "test_fraction", path, 0.2)),
            bias_enabled=bool(item.get("bias_enabled", True)),
        )
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_experiment(doc, base_dir="."):
    """Validate a config document into an ExperimentConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("config root: expected an object")
    model = _need(doc, "model", "config", dict)
    enc = _parse_layers(_need(model, "encoder", "config.model", list), "config.model.encoder")
    dec = _parse_layers(_need(model, "decoder", "config.model", list), "config.model.decoder")
    if enc[-1].out_dim != dec[0].in_dim:
        raise ConfigError("config.model: encoder output dim != decoder input dim")
    if enc[0].in_dim != dec[-1].out_dim:
        raise ConfigError("config.model: decoder output dim != encoder input dim")
    data = _need(doc, "data", "config", dict)
    kind = _need(data, "kind", "config.data", str)
    if kind not in _DATA_KINDS:
        raise ConfigError(f"config.data.kind: unknown {kind!r}, choose from {_DATA_KINDS}")
    if kind == "csv":
        p = _need(data, "path", "config.data", str)
        full = p if os.path.isabs(p) else os.path.join(base_dir, p)
        if not os.path.exists(full):
            raise ConfigError(f"config.data.path: no such file {full}")
    norm = doc.get("normalization", "minmax01")
    if norm not in _NORMS:
        raise ConfigError(f"config.normalization: unknown {norm!r}, choose from {_NORMS}")
    train = _parse_train(_need(doc, "train", "config", dict), "config.train")
    outputs = doc.get("outputs", "outputs")
    if not isinstance(outputs, str) or not outputs:
        raise ConfigError("config.outputs: expected a nonempty path string")
    methods = []
    if "methods" in doc:
        items = doc["methods"]
        if not isinstance(items, list) or not items:
            raise ConfigError("config.methods: expected a nonempty list")
        seen = set()
        for i, m in enumerate(items):
            p = f"config.methods[{i}]"
            if not isinstance(m, dict):
                raise ConfigError(f"{p}: expected an object")
            name = _need(m, "name", p, str)
            if name in seen:
                raise ConfigError(f"{p}.name: duplicate {name!r}")
            seen.add(name)
            methods.append((name, _parse_reg(m.get("reg"), f"{p}.reg")))
    return ExperimentConfig(enc, dec, data, norm, train, outputs, methods, base_dir)


def _orbit_features(data, path, d):
    n = int(_num(data, "n", path, 64))
    noise = float(_num(data, "noise_std", path, 0.0))
    seed = int(_num(data, "seed", path, 0))
    x0 = data.get("x0")
    if x0 is None:
        x0 = np.zeros(d)
        x0[0] = 1.0
    else:
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.shape != (d,):
            raise ConfigError(f"{path}.x0: expected {d} entries")
    gs = make_named_generator("rotation2d" if d == 2 else "block_rotations", d)
    if "thetas" in data:
        thetas = np.asarray(data["thetas"], dtype=np.float64)
        if thetas.ndim == 1:
            thetas = thetas.reshape(-1, 1)
        if thetas.shape[1] != gs.h:
            raise ConfigError(f"{path}.thetas: expected rows of {gs.h} angles")
        spec = OrbitSpec(x0, gs, thetas=[row for row in thetas], noise_std=noise)
    else:
        spec = OrbitSpec(x0, gs, n=n, noise_std=noise)
    X, _ = gen_orbit_dataset(spec, make_rng(seed, 6))
    return X, None


def build_dataset(cfg):
    """Materialize (features, labels, NormRecord) for an ExperimentConfig."""
    data = cfg.data
    kind = data["kind"]
    if kind == "csv":
        p = data["path"]
        full = p if os.path.isabs(p) else os.path.join(cfg.base_dir, p)
        table = load_csv(full, bool(data.get("has_label_column", False)))
    elif kind == "orbit_circle":
        X, labels = _orbit_features(data, "config.data", 2)
        table = DatasetTable(X, labels)
    elif kind == "orbit_blocks":
        d = int(_num(data, "d", "config.data"))
        if d < 2 or d % 2 != 0:
            raise ConfigError("config.data.d: block rotations need even d >= 2")
        X, labels = _orbit_features(data, "config.data", d)
        table = DatasetTable(X, labels)
    elif kind == "control_chart":
        X, labels = gen_control_chart(
            int(_num(data, "n_per_class", "config.data", 100)),
            int(_num(data, "d", "config.data", 60)),
            int(_num(data, "seed", "config.data", 0)),
        )
        table = DatasetTable(X, labels)
    else:
        raise ConfigError(f"config.data.kind: unknown {kind!r}")
    d = table.features.shape[1]
    want = cfg.encoder_specs[0].in_dim
    if d != want:
        raise ConfigError(f"config.data: feature dim {d} != model input dim {want}")
    table = normalize(table, cfg.normalization)
    return table.features, table.labels, table.norm
