"""Adam training of autoencoders with the configured penalty term, plus
seeded multi-run suites.

Every stochastic concern draws from its own derived stream (batch order,
regularizer sampling, data splits), so a run is bit-reproducible from
(seed, config, dataset) and the plain trainer trace is untouched by penalty
code paths that are switched off.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import partition
from .data import SplitData, split_dataset
from .errors import ConfigError, ContractError, DivergenceError, ShapeError, SplineaeError
from .liegroup import generators_to_dict, init_generators
from .network import forward_batch, init_model, model_to_dict, stage_on_tape, taped_forward
from .numerics import tape as T
from .numerics.rng import make_rng
from .regularizers import (
    RegConfig,
    corrupt,
    hoc_penalty,
    reg_first_order,
    reg_second_order,
)

__all__ = [
    "AdamState",
    "RunRecord",
    "SuiteEntry",
    "SuiteRow",
    "TrainConfig",
    "adam_step",
    "loss",
    "run_suite",
    "train",
]


@dataclass
class TrainConfig:
    epochs: int = 125
    batch_size: int = 16
    lr: float = 1e-3
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    reg: RegConfig = field(default_factory=RegConfig)
    seed: int = 0
    runs: int = 1
    val_fraction: float = 0.2
    test_fraction: float = 0.2
    bias_enabled: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.runs < 1:
            raise ConfigError("epochs, batch_size and runs must be >= 1")
        if self.lr <= 0:
            raise ConfigError("lr must be > 0")
        if not (0.0 < self.val_fraction < 1.0):
            raise ConfigError("val_fraction must lie in (0,1)")
        if not (0.0 <= self.test_fraction < 1.0):
            raise ConfigError("test_fraction must lie in [0,1)")
        if self.adam_eps <= 0:
            raise ConfigError("adam_eps must be > 0")
        b1, b2 = self.adam_betas
        if not (0.0 <= b1 < 1.0 and 0.0 <= b2 < 1.0):
            raise ConfigError("adam betas must lie in [0,1)")


@dataclass
class RunRecord:
    train_mse: list
    val_mse: list
    test_mse: list
    best_epoch: int
    final_test_mse: object  # float, or None without a test split
    epsilon_trace: list  # (global step, eps list)
    wall_clock_s: float
    seed: int
    diverged: bool = False
    error: str = None


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def adam_step(params, grads, state, lr, betas=(0.9, 0.999), eps=1e-8):
    """One bias-corrected Adam update over a named parameter collection."""
    b1, b2 = betas
    state.t += 1
    t = state.t
    out = {}
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != param {p.shape} for {name}")
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1.0 - b1) * g if m is None else b1 * m + (1.0 - b1) * g
        v = (1.0 - b2) * g * g if v is None else b2 * v + (1.0 - b2) * g * g
        state.m[name] = m
        state.v[name] = v
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        out[name] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
    return out, state


def mse(model, X, bias_enabled=True):
    """Mean squared reconstruction error per entry; None on an empty split."""
    if X is None or len(X) == 0:
        return None
    Y, _, _ = forward_batch(model, np.asarray(X, dtype=np.float64), bias_enabled)
    R = Y - X
    return float((R * R).mean())


def loss(tm, gen_nodes, batch, cfg, rng, sampler=None):
    """Training objective on tape for one minibatch.

    Mean over the batch of the squared reconstruction norm (of corrupted
    inputs against clean targets for the denoising kind), plus the
    weight-scaled penalty term with one stochastic draw. Returns
    (scalar node, EpsilonSolve or None).
    """
    tape = tm.encoder[0].W.tape
    X = np.asarray(batch, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ContractError("batch must be a nonempty (n,d) array")
    n = len(X)
    reg = cfg.reg
    Xin = X
    if reg.kind == "denoise" and reg.corruption_std > 0:
        Xin = corrupt(X, reg.corruption_std, rng)
    out = taped_forward(tm, tape.constant(Xin))
    recon = T.sumsq(out - tape.constant(X)) * (1.0 / n)
    solve = None
    if reg.weight > 0 and reg.kind == "lie1":
        bias = tm.encoder[0].b is not None
        pool = forward_batch(tm.model, X, bias)[2]
        term, solve = reg_first_order(tm, gen_nodes, reg, rng, latent_pool=pool)
        recon = recon + term
    elif reg.weight > 0 and reg.kind == "lie2":
        if sampler is None:
            raise ContractError("lie2 loss needs a neighbor-pair sampler")
        term, solve = reg_second_order(tm, gen_nodes, reg, rng, sampler)
        recon = recon + term
    elif reg.weight > 0 and reg.kind == "hoc":
        x = X[int(rng.integers(n))]
        recon = recon + hoc_penalty(tm, x, reg, rng)
    return recon, solve


def _writeback(tm, new_params):
    model = tm.model
    for side, layers in (("enc", model.encoder), ("dec", model.decoder)):
        for i, layer in enumerate(layers):
            layer.W = new_params[f"{side}{i}.W"]
            key = f"{side}{i}.b"
            if key in new_params:
                layer.b = new_params[key]


def train(model, gens, dataset, cfg):
    """Run the full loop on `model` (mutated in place); returns a RunRecord.

    dataset: a SplitData, or a raw (n,d) array split by cfg fractions with a
    seeded shuffle. Weights, biases, and learnable generators update jointly
    every step. A non-finite loss aborts with the partial record attached.
    """
    t_start = time.perf_counter()
    if isinstance(dataset, SplitData):
        split = dataset
    else:
        split = split_dataset(
            np.asarray(dataset, dtype=np.float64),
            cfg.val_fraction,
            cfg.test_fraction,
            cfg.seed,
        )
    Xtr = np.asarray(split.train, dtype=np.float64)
    if len(Xtr) == 0:
        raise ConfigError("no training rows")
    needs_gens = cfg.reg.kind in ("lie1", "lie2") and cfg.reg.weight > 0
    if gens is None and needs_gens:
        gens = init_generators(
            model.latent_dim, model.input_dim, make_rng(cfg.seed, 4), learnable=True
        )
    rng_batch = make_rng(cfg.seed, 1)
    rng_reg = make_rng(cfg.seed, 2)
    sampler = None
    if cfg.reg.kind == "lie2":
        def sampler(r):
            return partition.sample_neighbor_pair(
                model,
                r,
                law="gaussian",
                initial_step=cfg.reg.hessian_sigma,
                bias_enabled=cfg.bias_enabled,
            )

    state = AdamState()
    record = RunRecord([], [], [], 0, None, [], 0.0, cfg.seed)
    n = len(Xtr)
    global_step = 0
    for epoch in range(cfg.epochs):
        perm = rng_batch.permutation(n)
        for s0 in range(0, n, cfg.batch_size):
            batch = Xtr[perm[s0 : s0 + cfg.batch_size]]
            tape = T.Tape()
            tm = stage_on_tape(model, tape, cfg.bias_enabled)
            gen_nodes = None
            if needs_gens:
                gen_nodes = [
                    tape.leaf(g) if gens.learnable else tape.constant(g)
                    for g in gens.generators
                ]
            node, solve = loss(tm, gen_nodes, batch, cfg, rng_reg, sampler=sampler)
            value = float(node.value)
            if not np.isfinite(value):
                record.diverged = True
                record.error = f"non-finite loss at epoch {epoch}, step {global_step}"
                record.wall_clock_s = time.perf_counter() - t_start
                raise DivergenceError(record.error, record)
            grads = T.backward(tape, node)
            params = {}
            gvals = {}
            for name, leaf in tm.parameters():
                params[name] = leaf.value
                gvals[name] = grads[leaf]
            if needs_gens and gens.learnable:
                for k, gnode in enumerate(gen_nodes):
                    params[f"G{k}"] = gnode.value
                    gvals[f"G{k}"] = grads[gnode]
            new_params, state = adam_step(
                params, gvals, state, cfg.lr, cfg.adam_betas, cfg.adam_eps
            )
            _writeback(tm, new_params)
            if needs_gens and gens.learnable:
                gens.generators = [
                    new_params[f"G{k}"] for k in range(len(gens.generators))
                ]
            if solve is not None:
                record.epsilon_trace.append((global_step, [float(e) for e in solve.epsilon]))
            global_step += 1
        record.train_mse.append(mse(model, split.train, cfg.bias_enabled))
        record.val_mse.append(mse(model, split.val, cfg.bias_enabled))
        record.test_mse.append(mse(model, split.test, cfg.bias_enabled))
    vals = [v for v in record.val_mse if v is not None]
    if vals:
        best = min(range(len(record.val_mse)), key=lambda i: (record.val_mse[i], i))
        record.best_epoch = best
    else:
        record.best_epoch = cfg.epochs - 1
    record.final_test_mse = record.test_mse[record.best_epoch]
    record.wall_clock_s = time.perf_counter() - t_start
    return record


@dataclass
class SuiteEntry:
    name: str
    encoder_specs: list
    decoder_specs: list
    cfg: TrainConfig


@dataclass
class SuiteRow:
    name: str
    mean: object
    std: object
    finals: list
    failures: list  # (seed, message)
    records: list
    models: list = field(default_factory=list)  # serialized dict per clean run
    gens: list = field(default_factory=list)  # serialized dict or None per clean run


def _suite_task(entry, run_idx, split):
    run_seed = entry.cfg.seed + run_idx
    cfg = replace(entry.cfg, seed=run_seed, runs=1)
    model = init_model(entry.encoder_specs, entry.decoder_specs, run_seed)
    gens = None
    if cfg.reg.kind in ("lie1", "lie2") and cfg.reg.weight > 0:
        gens = init_generators(
            model.latent_dim, model.input_dim, make_rng(run_seed, 4), learnable=True
        )
    try:
        record = train(model, gens, split, cfg)
        gdict = generators_to_dict(gens) if gens is not None else None
        return run_idx, record, None, model_to_dict(model), gdict
    except SplineaeError as exc:
        return run_idx, None, f"{type(exc).__name__}: {exc}", None, None


def run_suite(entries, split, workers=1):
    """Train every entry for cfg.runs seeded runs; aggregate final test MSE.

    Run r of every entry uses seed cfg.seed + r, so methods sharing a base
    seed see identical model inits and batch orders. Failed runs are recorded
    with their message, never dropped. workers > 1 fans runs across
    processes; merging is keyed by (entry, run) and order-independent.
    """
    if not entries:
        raise ConfigError("suite needs at least one entry")
    tasks = [(i, r) for i, e in enumerate(entries) for r in range(e.cfg.runs)]
    results = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                (i, r): pool.submit(_suite_task, entries[i], r, split)
                for i, r in tasks
            }
            for key, fut in futures.items():
                _, record, err, mdict, gdict = fut.result()
                results[key] = (record, err, mdict, gdict)
    else:
        for i, r in tasks:
            _, record, err, mdict, gdict = _suite_task(entries[i], r, split)
            results[(i, r)] = (record, err, mdict, gdict)
    rows = []
    for i, entry in enumerate(entries):
        row = SuiteRow(entry.name, None, None, [], [], [])
        for r in range(entry.cfg.runs):
            record, err, mdict, gdict = results[(i, r)]
            if err is not None:
                row.failures.append((entry.cfg.seed + r, err))
            else:
                row.records.append(record)
                row.finals.append(record.final_test_mse)
                row.models.append(mdict)
                row.gens.append(gdict)
        clean = [f for f in row.finals if f is not None]
        if clean:
            row.mean = float(np.mean(clean))
            row.std = float(np.std(clean))
        rows.append(row)
    return rows
