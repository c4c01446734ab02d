"""Training penalties: the two group-linearization regularizers with their
closed-form per-pair strength solve, an orbit-fit functional for 1-D curve
models, and the contractive/denoising baselines.

The first-order term ties nearby decoder outputs D(theta), D(theta') by the
best linearized group transform (I + sum_k eps_k G_k); the second-order term
ties the decoder tangents of neighboring regions the same way. In both, the
strength vector eps* is solved in closed form from a Gram system and treated
as a constant during backpropagation, as are the activation masks.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, DegenerateError
from .network import (
    forward,
    taped_decode,
    taped_encoder_affine,
)
from .numerics import tape as T
from .numerics.linalg import cholesky_solve

__all__ = [
    "EpsilonSolve",
    "HocTerms",
    "RegConfig",
    "corrupt",
    "hoc_penalty",
    "hoc_terms",
    "reg_first_order",
    "reg_order_k_interpolant",
    "reg_second_order",
    "solve_epsilon_first",
    "solve_epsilon_second",
]

REG_KINDS = ("none", "lie1", "lie2", "hoc", "denoise")


@dataclass
class RegConfig:
    kind: str = "none"
    weight: float = 0.0
    neighborhood_radius: float = 0.1
    hessian_sigma: float = 0.01
    hessian_count: int = 4
    corruption_std: float = 0.0
    ridge: float = 1e-8

    def __post_init__(self):
        if self.kind not in REG_KINDS:
            raise ConfigError(f"unknown regularizer kind {self.kind!r}")
        if self.weight < 0:
            raise ConfigError("regularizer weight must be >= 0")
        if self.kind == "lie1" and self.neighborhood_radius <= 0:
            raise ConfigError("lie1 needs neighborhood_radius > 0")
        if self.kind in ("lie2", "hoc") and self.hessian_sigma <= 0:
            raise ConfigError(f"{self.kind} needs hessian_sigma > 0")
        if self.hessian_count < 1:
            raise ConfigError("hessian_count must be >= 1")
        if self.corruption_std < 0:
            raise ConfigError("corruption_std must be >= 0")
        if self.ridge < 0:
            raise ConfigError("ridge must be >= 0")


@dataclass
class EpsilonSolve:
    epsilon: np.ndarray
    gram: np.ndarray
    rhs: np.ndarray
    residual: float


def _solve(gram, rhs, ridge, directions, diff):
    eps = cholesky_solve(gram, rhs, ridge)
    r = diff.copy()
    for k in range(len(directions)):
        r -= eps[k] * directions[k]
    residual = float(np.sqrt((r * r).sum()))
    return EpsilonSolve(eps, gram, rhs, residual)


def solve_epsilon_first(gs, d_theta, d_theta_prime, ridge=1e-8):
    """Best eps for ||D(theta) - (I + sum eps_k G_k) D(theta')||_2.

    Gram_{jk} = <G_j D(theta'), G_k D(theta')>, rhs_j = <D(theta) - D(theta'),
    G_j D(theta')>.
    """
    v = np.asarray(d_theta, dtype=np.float64)
    vp = np.asarray(d_theta_prime, dtype=np.float64)
    if not np.any(vp != 0.0):
        raise DegenerateError("transform base D(theta') is the zero vector")
    dirs = [g @ vp for g in gs.generators]
    h = len(dirs)
    gram = np.empty((h, h))
    for j in range(h):
        for k in range(j, h):
            gram[j, k] = gram[k, j] = float(dirs[j] @ dirs[k])
    diff = v - vp
    rhs = np.array([float(diff @ u) for u in dirs])
    return _solve(gram, rhs, ridge, dirs, diff)


def solve_epsilon_second(gs, J_omega, J_omega_prime, ridge=1e-8):
    """Best eps for ||J_omega' - (I + sum eps_k G_k) J_omega||_F.

    Column-summed Gram: Gram_{jk} = sum_i <G_j J_omega[:,i], G_k J_omega[:,i]>.
    """
    J = np.asarray(J_omega, dtype=np.float64)
    Jp = np.asarray(J_omega_prime, dtype=np.float64)
    if J.shape != Jp.shape:
        raise ContractError(f"tangent shapes differ: {J.shape} vs {Jp.shape}")
    if not np.any(J != 0.0):
        raise DegenerateError("transform base tangent is the zero matrix")
    dirs = [g @ J for g in gs.generators]
    h = len(dirs)
    gram = np.empty((h, h))
    for j in range(h):
        for k in range(j, h):
            gram[j, k] = gram[k, j] = float((dirs[j] * dirs[k]).sum())
    diff = Jp - J
    rhs = np.array([float((u * diff).sum()) for u in dirs])
    return _solve(gram, rhs, ridge, dirs, diff)


def _transform_node(gen_nodes, eps, tape, dim):
    """(I + sum_k eps_k G_k) as a tape node; eps entries are constants."""
    acc = tape.constant(np.eye(dim))
    for k, g in enumerate(gen_nodes):
        acc = acc + g * float(eps[k])
    return acc


def _gen_values(gen_nodes):
    from .liegroup import GeneratorSet

    return GeneratorSet([g.value for g in gen_nodes])


def draw_theta(model_latent_dim, rng, rho, latent_pool=None):
    """One (theta, theta') draw: theta from a 50/50 mixture of training-batch
    embeddings and standard gaussians, theta' uniform in the rho-box around it.
    """
    use_pool = latent_pool is not None and len(latent_pool) > 0
    if rng.uniform() < 0.5 and use_pool:
        theta = np.asarray(latent_pool[int(rng.integers(len(latent_pool)))], dtype=np.float64)
    else:
        theta = rng.standard_normal(model_latent_dim)
    theta_prime = theta + rng.uniform(-rho, rho, size=model_latent_dim)
    return theta, theta_prime


def reg_first_order(tm, gen_nodes, cfg, rng, latent_pool=None):
    """First-order group penalty, one (theta, theta') draw.

    Returns (weight * ||D(theta) - (I + sum eps* G) D(theta')||_2 on tape,
    EpsilonSolve). Gradients flow into decoder weights and generators; eps*
    is frozen.
    """
    tape = tm.encoder[0].W.tape
    h = tm.model.latent_dim
    theta, theta_prime = draw_theta(h, rng, cfg.neighborhood_radius, latent_pool)
    d_theta = taped_decode(tm, theta)
    d_theta_prime = taped_decode(tm, theta_prime)
    solve = solve_epsilon_first(
        _gen_values(gen_nodes), d_theta.value, d_theta_prime.value, cfg.ridge
    )
    transform = _transform_node(gen_nodes, solve.epsilon, tape, tm.model.input_dim)
    loss = T.norm2(d_theta - transform @ d_theta_prime) * cfg.weight
    return loss, solve


def reg_second_order(tm, gen_nodes, cfg, rng, sampler):
    """Second-order group penalty on one sampled neighbor pair.

    sampler(rng) must return a NeighborPair or None; None (no boundary found,
    e.g. a linear decoder) contributes loss 0 for the draw.
    """
    tape = tm.encoder[0].W.tape
    pair = sampler(rng)
    if pair is None:
        return tape.constant(np.asarray(0.0)), None
    from .network import taped_decoder_tangent

    J_base = taped_decoder_tangent(tm, pair.a.code)
    J_target = taped_decoder_tangent(tm, pair.b.code)
    solve = solve_epsilon_second(
        _gen_values(gen_nodes), J_base.value, J_target.value, cfg.ridge
    )
    transform = _transform_node(gen_nodes, solve.epsilon, tape, tm.model.input_dim)
    loss = T.norm2(J_target - transform @ J_base) * cfg.weight
    return loss, solve


@dataclass
class HocTerms:
    slope_norm: float  # ||A_enc at the anchor region||_F
    neighbor_gap: float  # sum of ||A_enc - A_enc'||_F over differing codes


def hoc_terms(model, code, neighbor_codes, bias_enabled=True):
    """Deterministic core of the contractive penalty on given region codes."""
    from .cpa import encoder_affine

    A = encoder_affine(model, code, bias_enabled).A
    first = float(np.sqrt((A * A).sum()))
    second = 0.0
    for cj in neighbor_codes:
        if cj != code:
            Aj = encoder_affine(model, cj, bias_enabled).A
            second += float(np.sqrt(((A - Aj) ** 2).sum()))
    return HocTerms(first, second)


def hoc_penalty(tm, x, cfg, rng):
    """Contractive penalty at x, on tape with masks frozen.

    weight * (||A_enc||_F + sum over code-changing corrupted inputs of
    ||A_enc - A_enc'||_F); neighbor regions are found by probing
    hessian_count corruptions of x at scale hessian_sigma.
    """
    model = tm.model
    bias = tm.encoder[0].b is not None
    x = np.asarray(x, dtype=np.float64)
    n_enc = model.encoder_state_count
    code = forward(model, x, bias_enabled=bias).code.split(n_enc)[0]
    A = taped_encoder_affine(tm, code)
    loss = T.norm2(A)
    for _ in range(cfg.hessian_count):
        xj = x + cfg.hessian_sigma * rng.standard_normal(x.shape)
        cj = forward(model, xj, bias_enabled=bias).code.split(n_enc)[0]
        if cj != code:
            Aj = taped_encoder_affine(tm, cj)
            loss = loss + T.norm2(A - Aj)
    return loss * cfg.weight


def corrupt(x, std, rng):
    """x + std * gaussian; std=0 returns x untouched (no draw)."""
    if std < 0:
        raise ContractError("corruption std must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    if std == 0:
        return x
    return x + std * rng.standard_normal(x.shape)


def reg_order_k_interpolant(f, G, k, grid):
    """Orbit-fit functional of a 1-D curve model f: theta -> R^d.

    Trapezoid quadrature of ||f^(k) - G f^(k-1)||_2 over the interior grid
    nodes, derivatives by central differences. Vanishes (to quadrature error)
    exactly when f follows the one-parameter group flow of G.
    """
    if k not in (1, 2):
        raise ContractError("k must be 1 or 2")
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < k + 2:
        raise ContractError(f"grid needs at least {k + 2} points")
    if np.any(np.diff(grid) <= 0):
        raise ContractError("grid must be strictly increasing")
    G = np.asarray(G, dtype=np.float64)
    F = np.stack([np.asarray(f(t), dtype=np.float64) for t in grid])
    t = grid
    d1 = (F[2:] - F[:-2]) / (t[2:] - t[:-2])[:, None]
    if k == 1:
        resid = d1 - F[1:-1] @ G.T
    else:
        left = (F[1:-1] - F[:-2]) / (t[1:-1] - t[:-2])[:, None]
        right = (F[2:] - F[1:-1]) / (t[2:] - t[1:-1])[:, None]
        d2 = 2.0 * (right - left) / (t[2:] - t[:-2])[:, None]
        resid = d2 - d1 @ G.T
    vals = np.sqrt((resid * resid).sum(axis=1))
    return float(np.trapezoid(vals, t[1:-1]))
