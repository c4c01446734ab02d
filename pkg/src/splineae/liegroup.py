"""Matrix Lie group machinery: generators, exponentials, orbits.

A generator G turns a scalar theta into the transformation exp(theta G);
datasets modeled as group orbits are synthesized by sweeping theta and
multiplying the exponentials onto an anchor point.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateError, IngestionError, NumericError, ShapeError
from .numerics.rng import make_rng

__all__ = [
    "GeneratorSet",
    "OrbitSpec",
    "first_order_transform",
    "gen_orbit_dataset",
    "generators_from_dict",
    "generators_to_dict",
    "init_generators",
    "make_named_generator",
    "matrix_exp",
    "orbit_point",
]

_TAYLOR_ORDER = 18


def matrix_exp(G, theta=1.0):
    """exp(theta*G) by scaling-and-squaring.

    theta*G is scaled by 2^-s until its 1-norm is <= 0.5, the exponential of
    the scaled matrix is summed as a Taylor series to order 18, and the
    result is squared s times.
    """
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ShapeError(f"matrix_exp needs a square matrix, got {G.shape}")
    n = G.shape[0]
    M = float(theta) * G
    norm1 = float(np.abs(M).sum(axis=0).max())
    s = 0
    if norm1 > 0.5:
        s = int(np.ceil(np.log2(norm1 / 0.5)))
    S = M / (2.0**s)
    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, _TAYLOR_ORDER + 1):
        term = term @ S / k
        E = E + term
    for _ in range(s):
        E = E @ E
    if not np.all(np.isfinite(E)):
        raise NumericError("matrix exponential overflowed")
    return E


@dataclass
class GeneratorSet:
    generators: list
    learnable: bool = False

    def __post_init__(self):
        self.generators = [np.asarray(g, dtype=np.float64) for g in self.generators]
        if not self.generators:
            raise ConfigError("GeneratorSet needs at least one generator")
        d = self.generators[0].shape
        if len(d) != 2 or d[0] != d[1]:
            raise ShapeError(f"generators must be square, got {d}")
        for g in self.generators:
            if g.shape != d:
                raise ShapeError("generators must share one dimension")

    @property
    def h(self):
        return len(self.generators)

    @property
    def dim(self):
        return self.generators[0].shape[0]


def orbit_point(gs, x0, theta):
    """prod_k exp(theta_k G_k) applied to x0, k ascending left to right."""
    x0 = np.asarray(x0, dtype=np.float64)
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if x0.shape != (gs.dim,):
        raise ShapeError(f"x0 shape {x0.shape}, expected ({gs.dim},)")
    if theta.shape != (gs.h,):
        raise ShapeError(f"theta shape {theta.shape}, expected ({gs.h},)")
    x = x0
    for k in reversed(range(gs.h)):
        x = matrix_exp(gs.generators[k], theta[k]) @ x
    return x


def first_order_transform(gs, eps, v):
    """(I + sum_k eps_k G_k) v, the linearization of the group action."""
    v = np.asarray(v, dtype=np.float64)
    eps = np.atleast_1d(np.asarray(eps, dtype=np.float64))
    if v.shape != (gs.dim,):
        raise ShapeError(f"v shape {v.shape}, expected ({gs.dim},)")
    if eps.shape != (gs.h,):
        raise ShapeError(f"eps shape {eps.shape}, expected ({gs.h},)")
    out = v.copy()
    for k in range(gs.h):
        out = out + eps[k] * (gs.generators[k] @ v)
    return out


@dataclass
class OrbitSpec:
    x0: np.ndarray
    generator_set: GeneratorSet
    thetas: np.ndarray = None  # explicit (N,h); overrides sampling
    theta_ranges: list = None  # per-coordinate (lo, hi); default (0, 2pi)
    n: int = None  # sample count when thetas not given
    noise_std: float = 0.0

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=np.float64)
        if not np.any(self.x0 != 0.0):
            raise DegenerateError("orbit anchor x0 must be nonzero")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")
        if self.thetas is None and self.n is None:
            raise ConfigError("OrbitSpec needs explicit thetas or a sample count")


def gen_orbit_dataset(spec, rng):
    """Rows exp-map(theta_i) x0 + noise; returns (X (N,d), thetas (N,h))."""
    gs = spec.generator_set
    if spec.thetas is not None:
        thetas = np.asarray(spec.thetas, dtype=np.float64)
        if thetas.ndim == 1:
            thetas = thetas[:, None]
        if thetas.shape[1] != gs.h:
            raise ShapeError(f"thetas have {thetas.shape[1]} columns, expected {gs.h}")
    else:
        ranges = spec.theta_ranges or [(0.0, 2.0 * np.pi)] * gs.h
        if len(ranges) != gs.h:
            raise ConfigError(f"need {gs.h} theta ranges, got {len(ranges)}")
        cols = [rng.uniform(lo, hi, size=spec.n) for lo, hi in ranges]
        thetas = np.stack(cols, axis=1)
    X = np.stack([orbit_point(gs, spec.x0, t) for t in thetas])
    if spec.noise_std > 0:
        X = X + spec.noise_std * rng.standard_normal(X.shape)
    return X, thetas


def make_named_generator(kind, d=None):
    """Stock generator sets for fixtures: rotation2d, block_rotations, shear2d."""
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    if kind == "rotation2d":
        if d not in (None, 2):
            raise ConfigError("rotation2d needs d=2")
        return GeneratorSet([rot])
    if kind == "shear2d":
        if d not in (None, 2):
            raise ConfigError("shear2d needs d=2")
        return GeneratorSet([np.array([[0.0, 1.0], [0.0, 0.0]])])
    if kind == "block_rotations":
        if d is None or d < 2 or d % 2 != 0:
            raise ConfigError("block_rotations needs even d >= 2")
        gens = []
        for k in range(d // 2):
            g = np.zeros((d, d))
            g[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = rot
            gens.append(g)
        return GeneratorSet(gens)
    raise ConfigError(f"unknown generator kind {kind!r}")


def init_generators(h, d, seed, learnable=True):
    """Gaussian init, std 1/d: keeps early (I + eps G) perturbations small.

    seed: an integer, or an already-constructed numpy Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    gens = [rng.standard_normal((d, d)) / d for _ in range(h)]
    return GeneratorSet(gens, learnable=learnable)


def _encode_array(a):
    return [float(v).hex() for v in np.asarray(a, dtype=np.float64).ravel(order="C")]


def generators_to_dict(gs):
    return {
        "format": "splineae-generators-v1",
        "dim": gs.dim,
        "learnable": bool(gs.learnable),
        "generators": [_encode_array(g) for g in gs.generators],
    }


def generators_from_dict(doc):
    if not isinstance(doc, dict) or doc.get("format") != "splineae-generators-v1":
        raise IngestionError("not a recognized generator document")
    d = int(doc["dim"])
    gens = []
    for payload in doc["generators"]:
        flat = np.array([float.fromhex(v) for v in payload], dtype=np.float64)
        if flat.size != d * d:
            raise ConfigError("generator payload does not match dim")
        gens.append(flat.reshape(d, d))
    return GeneratorSet(gens, learnable=bool(doc.get("learnable", False)))
