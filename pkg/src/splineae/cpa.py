"""Per-region affine structure of a piecewise-affine autoencoder.

A trained model is, on each region of its input-space partition, exactly an
affine map: the encoder collapses to (A_enc, B_enc), the decoder to
(A_dec, B_dec), and the composition reconstructs the forward pass. The ops
here extract those maps from a region code, expose the induced Jacobians and
tangents, probe curvature across region boundaries, and evaluate the
bi-orthogonality diagnostics that perfect zero-bias reconstruction implies.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ShapeError
from .network import (
    RegionCode,
    decode,
    forward,
    state_multiplier,
)

__all__ = [
    "AffineMap",
    "RegionCode",
    "ae_jacobian",
    "biorthogonality_residual",
    "compose",
    "cor1_conditions",
    "decoder_affine",
    "decoder_tangent",
    "encoder_affine",
    "hessian_energy",
    "projection_view",
    "reconstruct_from_affine",
    "region_affine_record",
    "region_code",
]


@dataclass
class AffineMap:
    A: np.ndarray
    B: np.ndarray
    scope: str  # encoder | decoder | composed

    def __call__(self, x):
        return self.A @ np.asarray(x, dtype=np.float64) + self.B


def region_code(model, x, bias_enabled=True):
    """Joint activation pattern of all nonlinear layers at x."""
    return forward(model, x, bias_enabled=bias_enabled).code


def _affine_from_states(layers, states, bias_enabled):
    A = None
    B = None
    si = 0
    for layer in layers:
        A = layer.W if A is None else layer.W @ A
        if bias_enabled:
            B = layer.b if B is None else layer.W @ B + layer.b
        if layer.spec.nonlinear:
            mult = state_multiplier(states[si], layer.spec)
            si += 1
            A = mult[:, None] * A
            if bias_enabled:
                B = mult * B
    if B is None:
        B = np.zeros(A.shape[0])
    return A, B


def _side_states(model, code, side):
    """Slice the right states out of a full or side-only RegionCode."""
    n_enc = model.encoder_state_count
    n_dec = model.decoder_state_count
    if side == "encoder":
        want, offset = n_enc, 0
    else:
        want, offset = n_dec, n_enc
    if len(code) == want:
        states = code.states()
    elif len(code) == n_enc + n_dec:
        states = code.states()[offset : offset + want]
    else:
        raise ContractError(
            f"code has {len(code)} layers; expected {want} or {n_enc + n_dec}"
        )
    layers = model.encoder if side == "encoder" else model.decoder
    nl = [l for l in layers if l.spec.nonlinear]
    for st, layer in zip(states, nl):
        if st.shape != (layer.spec.out_dim,):
            raise ContractError("code width does not match layer width")
    return states


def encoder_affine(model, code, bias_enabled=True):
    """A_enc, B_enc with encode(x) = A_enc x + B_enc on code's region."""
    states = _side_states(model, code, "encoder")
    A, B = _affine_from_states(model.encoder, states, bias_enabled)
    return AffineMap(A, B, "encoder")


def decoder_affine(model, code, bias_enabled=True):
    """A_dec, B_dec with decode(z) = A_dec z + B_dec on code's region."""
    states = _side_states(model, code, "decoder")
    A, B = _affine_from_states(model.decoder, states, bias_enabled)
    return AffineMap(A, B, "decoder")


def compose(enc, dec):
    if enc.scope != "encoder" or dec.scope != "decoder":
        raise ContractError("compose expects (encoder, decoder) maps")
    return AffineMap(dec.A @ enc.A, dec.A @ enc.B + dec.B, "composed")


def reconstruct_from_affine(model, x, bias_enabled=True):
    """Reconstruction A_dec A_enc x + A_dec B_enc + B_dec at x's region.

    Agrees with forward(model, x).output up to float rounding; the region
    comes from the forward trace itself.
    """
    x = np.asarray(x, dtype=np.float64)
    code = region_code(model, x, bias_enabled)
    enc = encoder_affine(model, code, bias_enabled)
    dec = decoder_affine(model, code, bias_enabled)
    return dec.A @ (enc.A @ x + enc.B) + dec.B


@dataclass
class ProjectionView:
    """Reconstruction as a shifted projection: output = basis @ coords + offset.

    coords are the latent coordinates A_enc x + B_enc, basis columns are the
    per-region decoder directions (columns of A_dec), offset collects all
    bias terms A_dec B_enc + B_dec.
    """

    coords: np.ndarray
    basis: np.ndarray
    offset: np.ndarray
    output: np.ndarray


def projection_view(model, x, bias_enabled=True):
    x = np.asarray(x, dtype=np.float64)
    code = region_code(model, x, bias_enabled)
    enc = encoder_affine(model, code, bias_enabled)
    dec = decoder_affine(model, code, bias_enabled)
    coords = enc.A @ x + enc.B
    offset = dec.A @ enc.B + dec.B
    return ProjectionView(coords, dec.A, offset, dec.A @ coords + offset)


def ae_jacobian(model, x, bias_enabled=True):
    """End-to-end Jacobian A_dec A_enc at x's region (rank <= latent dim).

    At a region boundary the tie-broken code decides which side's Jacobian
    is returned.
    """
    code = region_code(model, x, bias_enabled)
    enc = encoder_affine(model, code, bias_enabled)
    dec = decoder_affine(model, code, bias_enabled)
    return dec.A @ enc.A


def decoder_tangent(model, z, bias_enabled=True):
    """Decoder slope A_dec at z's region; columns span the local surface."""
    z = np.asarray(z, dtype=np.float64)
    _, code = decode(model, z, bias_enabled)
    return decoder_affine(model, code, bias_enabled).A


def hessian_energy(model, z, sigma=None, m=4, rng=None, bias_enabled=True):
    """Stochastic curvature probe around latent z.

    Sums ||A_dec(z) - A_dec(z_j)||_F over m gaussian perturbations
    z_j = z + sigma * g_j, counting only draws whose decoder code differs
    (same-region draws contribute exactly 0 and are not resampled).
    Linear decoders give exactly 0 for any sigma.
    """
    if rng is None:
        raise ContractError("hessian_energy needs an rng")
    if m < 1:
        raise ContractError("m must be >= 1")
    z = np.asarray(z, dtype=np.float64)
    if sigma is None:
        sigma = 0.01 * float(np.linalg.norm(z)) + 1e-3
    if sigma <= 0:
        raise ContractError("sigma must be > 0")
    _, code = decode(model, z, bias_enabled)
    J = decoder_affine(model, code, bias_enabled).A
    total = 0.0
    for _ in range(m):
        zj = z + sigma * rng.standard_normal(z.shape)
        _, cj = decode(model, zj, bias_enabled)
        if cj != code:
            Jj = decoder_affine(model, cj, bias_enabled).A
            total += float(np.sqrt(((J - Jj) ** 2).sum()))
    return total


def biorthogonality_residual(model, x):
    """||A_enc A_dec - I_h||_F at x's region, evaluated in zero-bias mode.

    Exact zero-bias reconstruction on a region forces the encoder rows and
    decoder columns into a bi-orthogonal system, making this residual vanish;
    it measures how far a model is from that necessary condition.
    """
    code = region_code(model, x, bias_enabled=False)
    enc = encoder_affine(model, code, bias_enabled=False)
    dec = decoder_affine(model, code, bias_enabled=False)
    R = enc.A @ dec.A - np.eye(model.latent_dim)
    return float(np.sqrt((R * R).sum()))


def cor1_conditions(model, x, tol=1e-10):
    """Zero-inner-product conditions for a 2-layer ReLU autoencoder.

    The model must be a single ReLU encoder layer W1 (h x n) plus a single
    ReLU decoder layer W2 (n x h), evaluated in zero-bias mode. For each
    latent pair (k, k') the report records which of the four sufficient
    conditions for <a_dec_k, a_enc_k'> = 0 holds:

      i    encoder unit k' is inactive at x
      ii   every decoder unit is inactive at the latent of x
      iii  every decoder unit is active and <W2[:,k], W1[k',:]> = 0
      iv   the decoder-mask-weighted sum of W2[i,k] W1[k',i] vanishes

    plus the directly evaluated inner product.
    """
    if len(model.encoder) != 1 or len(model.decoder) != 1:
        raise ContractError("cor1_conditions needs 1 encoder + 1 decoder layer")
    if (
        model.encoder[0].spec.activation != "relu"
        or model.decoder[0].spec.activation != "relu"
    ):
        raise ContractError("cor1_conditions needs ReLU layers")
    x = np.asarray(x, dtype=np.float64)
    W1 = model.encoder[0].W
    W2 = model.decoder[0].W
    h = model.latent_dim
    pre_enc = W1 @ x
    latent = np.where(pre_enc > 0.0, pre_enc, 0.0)
    pre_dec = W2 @ latent
    dec_active = pre_dec > 0.0
    report = {}
    for k in range(h):
        for kp in range(h):
            plain = float(W2[:, k] @ W1[kp, :])
            masked = float((W2[:, k] * dec_active) @ W1[kp, :])
            cond_i = pre_enc[kp] <= 0.0
            cond_ii = bool(np.all(pre_dec <= 0.0))
            cond_iii = bool(np.all(pre_dec > 0.0)) and abs(plain) <= tol
            cond_iv = abs(masked) <= tol
            inner = (1.0 if pre_enc[kp] > 0.0 else 0.0) * masked
            report[(k, kp)] = {
                "i": bool(cond_i),
                "ii": cond_ii,
                "iii": cond_iii,
                "iv": cond_iv,
                "inner": inner,
            }
    return report


def region_affine_record(model, x, bias_enabled=True):
    """JSON-ready dump of x's region: code bitstring plus affine params."""
    x = np.asarray(x, dtype=np.float64)
    code = region_code(model, x, bias_enabled)
    enc = encoder_affine(model, code, bias_enabled)
    dec = decoder_affine(model, code, bias_enabled)
    comp = compose(enc, dec)

    def dump(am):
        return {"A": am.A.tolist(), "B": am.B.tolist()}

    return {
        "code": code.bitstring(),
        "encoder": dump(enc),
        "decoder": dump(dec),
        "composed": dump(comp),
    }
