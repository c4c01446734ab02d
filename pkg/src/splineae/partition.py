"""Sampling-based geometry of the model's region partition: neighbor search
across boundaries in latent space, region counting in input-space balls,
2-D partition rasters, decoder surface meshes, and per-region radius
estimates. Exact region enumeration is exponential and deliberately avoided;
everything here is probe-based and seeded.
"""

from dataclasses import dataclass

import numpy as np

from .cpa import decoder_affine
from .errors import ConfigError, ContractError
from .network import code_matrix, decode, encode, forward_batch

__all__ = [
    "BallCountReport",
    "NeighborPair",
    "RasterResult",
    "RadiusEstimate",
    "RegionSample",
    "SurfaceMesh",
    "count_regions_in_ball",
    "estimate_region_radius",
    "export_decoder_surface",
    "rasterize_partition_2d",
    "sample_neighbor_pair",
    "sample_region",
]


@dataclass
class RegionSample:
    z: np.ndarray
    code: object  # decoder-layer RegionCode
    tangent: np.ndarray  # decoder slope at the code


@dataclass
class NeighborPair:
    a: RegionSample
    b: RegionSample
    gap: float


@dataclass
class BallCountReport:
    center: np.ndarray
    radii: list
    counts: list
    data_counts: list
    probe_budget: int


def _attach(model, z, bias_enabled):
    _, code = decode(model, z, bias_enabled)
    tangent = decoder_affine(model, code, bias_enabled).A
    return RegionSample(z, code, tangent)


def sample_region(model, rng, law="gaussian", data=None, bias_enabled=True):
    """Draw a latent point per the law and attach its region code/tangent.

    law "gaussian": z ~ N(0, I_h). law "data_embedding": z = encode of a
    uniformly drawn row of `data`.
    """
    h = model.latent_dim
    if law == "gaussian":
        z = rng.standard_normal(h)
    elif law == "data_embedding":
        if data is None or len(data) == 0:
            raise ConfigError("data_embedding law needs a nonempty data batch")
        z = encode(model, np.asarray(data)[int(rng.integers(len(data)))], bias_enabled)
    else:
        raise ConfigError(f"unknown sampling law {law!r}")
    return _attach(model, z, bias_enabled)


def sample_neighbor_pair(
    model,
    rng,
    law="gaussian",
    data=None,
    max_iters=40,
    gap_tol=1e-7,
    initial_step=0.1,
    bias_enabled=True,
):
    """Locate two latent points in adjacent regions by bisection.

    From a sampled z1, a random direction is grown (doubling up to max_iters)
    until the decoder code changes, then the segment is bisected (up to 50
    halvings) until the endpoints straddle the boundary within gap_tol.
    Returns None when no code change is found within the budget (e.g. a
    linear decoder) or the gap cannot be closed.
    """
    if max_iters < 1:
        raise ContractError("max_iters must be >= 1")
    s1 = sample_region(model, rng, law, data, bias_enabled)
    direction = rng.standard_normal(model.latent_dim)
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        return None
    direction /= norm
    step = initial_step * (1.0 + float(np.linalg.norm(s1.z)))
    z_out = None
    for _ in range(max_iters):
        cand = s1.z + step * direction
        if decode(model, cand, bias_enabled)[1] != s1.code:
            z_out = cand
            break
        step *= 2.0
    if z_out is None:
        return None
    z_in = s1.z
    for _ in range(50):
        if float(np.linalg.norm(z_out - z_in)) <= gap_tol:
            break
        mid = 0.5 * (z_in + z_out)
        if decode(model, mid, bias_enabled)[1] == s1.code:
            z_in = mid
        else:
            z_out = mid
    gap = float(np.linalg.norm(z_out - z_in))
    if gap > gap_tol:
        return None
    a = _attach(model, z_in, bias_enabled)
    b = _attach(model, z_out, bias_enabled)
    return NeighborPair(a, b, gap)


def _full_code_rows(model, X, bias_enabled):
    _, states, _ = forward_batch(model, X, bias_enabled)
    return code_matrix(states)


def count_regions_in_ball(
    model, center, radii, probes, rng, data=None, bias_enabled=True
):
    """Distinct full-region codes among uniform probes of input-space balls.

    One probe cloud is drawn in the largest ball; each radius counts the
    probes (plus the center itself) within it, so probe sets are nested and
    counts are monotone. data_counts reports how many rows of `data` fall in
    each ball.
    """
    if probes < 1:
        raise ContractError("probes must be >= 1")
    center = np.asarray(center, dtype=np.float64)
    d = model.input_dim
    if center.shape != (d,):
        raise ContractError(f"center shape {center.shape}, expected ({d},)")
    radii = [float(r) for r in radii]
    if any(r < 0 for r in radii) or any(
        b < a for a, b in zip(radii, radii[1:])
    ):
        raise ContractError("radii must be nonnegative and ascending")
    rmax = radii[-1] if radii else 0.0
    dirs = rng.standard_normal((probes, d))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    dirs /= norms
    dist = rmax * rng.uniform(size=probes) ** (1.0 / d)
    pts = np.vstack([center[None, :], center[None, :] + dist[:, None] * dirs])
    dist = np.concatenate([[0.0], dist])
    rows = _full_code_rows(model, pts, bias_enabled)
    counts = []
    data_counts = []
    if data is not None:
        data = np.asarray(data, dtype=np.float64)
        ddist = np.linalg.norm(data - center[None, :], axis=1)
    for r in radii:
        sel = rows[dist <= r]
        counts.append(int(np.unique(sel, axis=0).shape[0]))
        data_counts.append(int((ddist <= r).sum()) if data is not None else 0)
    return BallCountReport(center, radii, counts, data_counts, probes)


@dataclass
class RasterResult:
    ids: np.ndarray  # (res, res) int region ids, row i <-> ys[i]
    boundary: np.ndarray  # (res, res) bool, any 4-neighbor id differs
    legend: list  # id -> code bitstring
    xs: np.ndarray
    ys: np.ndarray


def rasterize_partition_2d(model, bounds, resolution, bias_enabled=True):
    """Region-id grid of the input-space partition over a 2-D box.

    bounds = (xmin, xmax, ymin, ymax); ids are assigned first-seen in
    row-major scan order, so the raster is deterministic.
    """
    if model.input_dim != 2:
        raise ContractError("partition raster needs input dim 2")
    if resolution < 2:
        raise ContractError("resolution must be >= 2")
    xmin, xmax, ymin, ymax = (float(v) for v in bounds)
    if not (xmax > xmin and ymax > ymin):
        raise ContractError("bounds must span a box")
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    XX, YY = np.meshgrid(xs, ys)
    pts = np.column_stack([XX.ravel(), YY.ravel()])
    rows = _full_code_rows(model, pts, bias_enabled)
    ids = np.empty(len(rows), dtype=np.int64)
    seen = {}
    legend = []
    from .network import RegionCode

    for i, row in enumerate(rows):
        key = row.tobytes()
        if key not in seen:
            seen[key] = len(seen)
            legend.append(key)
        ids[i] = seen[key]
    ids = ids.reshape(resolution, resolution)
    boundary = np.zeros_like(ids, dtype=bool)
    boundary[:-1, :] |= ids[:-1, :] != ids[1:, :]
    boundary[1:, :] |= ids[1:, :] != ids[:-1, :]
    boundary[:, :-1] |= ids[:, :-1] != ids[:, 1:]
    boundary[:, 1:] |= ids[:, 1:] != ids[:, :-1]
    # legend keys back to per-layer bitstrings via a reference decode of widths
    widths = [l.spec.out_dim for l in model.layers if l.spec.nonlinear]
    strings = []
    for key in legend:
        states = np.frombuffer(key, dtype=np.int8)
        parts = []
        at = 0
        for w in widths:
            parts.append(states[at : at + w])
            at += w
        strings.append(RegionCode.from_states(parts).bitstring())
    return RasterResult(ids, boundary, strings, xs, ys)


@dataclass
class SurfaceMesh:
    vertices: np.ndarray  # (res*res, d) decoded points
    ids: np.ndarray  # (res*res,) decoder-region ids
    legend: list
    z1: np.ndarray
    z2: np.ndarray
    shape: tuple


def export_decoder_surface(model, latent_bounds, resolution, bias_enabled=True):
    """Decode a latent grid (h=2) into a mesh tagged with region ids."""
    if model.latent_dim != 2:
        raise ContractError("surface export needs latent dim 2")
    if resolution < 2:
        raise ContractError("resolution must be >= 2")
    amin, amax, bmin, bmax = (float(v) for v in latent_bounds)
    z1 = np.linspace(amin, amax, resolution)
    z2 = np.linspace(bmin, bmax, resolution)
    vertices = []
    ids = []
    seen = {}
    legend = []
    for zb in z2:
        for za in z1:
            y, code = decode(model, np.array([za, zb]), bias_enabled)
            vertices.append(y)
            if code not in seen:
                seen[code] = len(seen)
                legend.append(code.bitstring())
            ids.append(seen[code])
    return SurfaceMesh(
        np.asarray(vertices),
        np.asarray(ids, dtype=np.int64),
        legend,
        z1,
        z2,
        (resolution, resolution),
    )


@dataclass
class RadiusEstimate:
    radius: float
    found: int  # directions where a code change was located
    capped: int  # directions that hit the search cap
    directions: int


def estimate_region_radius(
    model, sample, directions=16, rng=None, cap=1e3, tol=1e-6, bias_enabled=True
):
    """Sampled lower bound on the circumscribed radius of a latent region.

    Along each random unit direction from sample.z the code-change distance
    is bracketed by doubling (up to `cap`) and bisected to `tol`. The radius
    is the maximum located distance; directions that never leave the region
    count as capped, and if every direction caps the radius reports `cap`
    (practically unbounded region).
    """
    if directions < 8:
        raise ContractError("directions must be >= 8")
    if rng is None:
        raise ContractError("estimate_region_radius needs an rng")
    z = sample.z
    code = sample.code
    found = []
    capped = 0
    for _ in range(directions):
        u = rng.standard_normal(z.shape)
        norm = float(np.linalg.norm(u))
        if norm == 0.0:
            capped += 1
            continue
        u /= norm
        lo, hi = 0.0, tol
        changed = False
        while hi <= cap:
            if decode(model, z + hi * u, bias_enabled)[1] != code:
                changed = True
                break
            lo, hi = hi, hi * 2.0
        if not changed:
            capped += 1
            continue
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if decode(model, z + mid * u, bias_enabled)[1] == code:
                lo = mid
            else:
                hi = mid
        found.append(0.5 * (lo + hi))
    radius = max(found) if found else cap
    return RadiusEstimate(float(radius), len(found), capped, directions)
