"""Fully connected autoencoders with activation-state capture.

Every nonlinearity here is piecewise linear (relu, leaky_relu, absolute), so
a forward pass induces a region of the input-space partition; the per-layer
activation states are recorded as a RegionCode alongside the outputs.

State conventions (shared with the tape ops in numerics.tape):
  relu      state in {0,1}, pre-activation exactly 0 -> 0 (inactive)
  leaky     state in {0,1}; multiplier slope when 0, 1 when 1
  absolute  state in {-1,+1}, pre-activation exactly 0 -> +1
  linear    no state recorded
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, IngestionError, ShapeError
from .numerics import tape as T
from .numerics.rng import make_rng

ACTIVATIONS = ("relu", "leaky_relu", "absolute", "linear")


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "linear"
    slope: float = 0.01  # leaky_relu only

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.in_dim < 1 or self.out_dim < 1:
            raise ConfigError("layer dims must be >= 1")
        if self.activation == "leaky_relu" and not (0.0 < self.slope < 1.0):
            raise ConfigError("leaky_relu slope must lie in (0,1)")

    @property
    def nonlinear(self):
        return self.activation != "linear"


@dataclass
class Layer:
    spec: LayerSpec
    W: np.ndarray  # (out_dim, in_dim)
    b: np.ndarray  # (out_dim,)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.shape != (self.spec.out_dim, self.spec.in_dim):
            raise ShapeError(
                f"W shape {self.W.shape} != ({self.spec.out_dim}, {self.spec.in_dim})"
            )
        if self.b.shape != (self.spec.out_dim,):
            raise ShapeError(f"b shape {self.b.shape} != ({self.spec.out_dim},)")


@dataclass(frozen=True)
class RegionCode:
    """Per-layer activation states of all nonlinear layers, as int8 bytes.

    Equality/hash of the byte tuples is the region identity. The encoder
    prefix addresses the joint encoder+decoder partition; the decoder suffix
    alone addresses the decoder partition.
    """

    layer_states: tuple

    @staticmethod
    def from_states(states):
        return RegionCode(tuple(np.asarray(s, dtype=np.int8).tobytes() for s in states))

    def states(self):
        return tuple(np.frombuffer(b, dtype=np.int8) for b in self.layer_states)

    def __len__(self):
        return len(self.layer_states)

    def split(self, n_prefix_layers):
        return (
            RegionCode(self.layer_states[:n_prefix_layers]),
            RegionCode(self.layer_states[n_prefix_layers:]),
        )

    def bitstring(self):
        chars = {1: "1", 0: "0", -1: "-"}
        return "|".join(
            "".join(chars[int(v)] for v in s) for s in self.states()
        )


@dataclass
class ForwardTrace:
    output: np.ndarray
    code: RegionCode
    latent: np.ndarray


@dataclass
class AEModel:
    encoder: list
    decoder: list

    def __post_init__(self):
        chain = self.encoder + self.decoder
        if not self.encoder or not self.decoder:
            raise ConfigError("encoder and decoder must both be nonempty")
        for prev, nxt in zip(chain, chain[1:]):
            if prev.spec.out_dim != nxt.spec.in_dim:
                raise ConfigError(
                    f"layer chain breaks: {prev.spec.out_dim} -> {nxt.spec.in_dim}"
                )
        if chain[0].spec.in_dim != chain[-1].spec.out_dim:
            raise ConfigError("input and output dimensions differ")
        for layer in chain:
            if layer.W.shape != (layer.spec.out_dim, layer.spec.in_dim):
                raise ShapeError(f"weight shape {layer.W.shape} != spec")
            if layer.b.shape != (layer.spec.out_dim,):
                raise ShapeError(f"bias shape {layer.b.shape} != spec")

    @property
    def input_dim(self):
        return self.encoder[0].spec.in_dim

    @property
    def latent_dim(self):
        return self.encoder[-1].spec.out_dim

    @property
    def layers(self):
        return self.encoder + self.decoder

    @property
    def encoder_state_count(self):
        return sum(1 for l in self.encoder if l.spec.nonlinear)

    @property
    def decoder_state_count(self):
        return sum(1 for l in self.decoder if l.spec.nonlinear)


def init_model(encoder_specs, decoder_specs, seed):
    """Glorot-uniform weights, zero biases; deterministic per seed."""
    rng = make_rng(seed)
    layers = []
    for spec in list(encoder_specs) + list(decoder_specs):
        limit = np.sqrt(6.0 / (spec.in_dim + spec.out_dim))
        W = rng.uniform(-limit, limit, size=(spec.out_dim, spec.in_dim))
        layers.append(Layer(spec, W, np.zeros(spec.out_dim)))
    n_enc = len(list(encoder_specs))
    return AEModel(layers[:n_enc], layers[n_enc:])


def _layer_state(z, spec):
    if spec.activation in ("relu", "leaky_relu"):
        return (z > 0.0).astype(np.int8)
    if spec.activation == "absolute":
        return np.where(z >= 0.0, 1, -1).astype(np.int8)
    return None


def state_multiplier(state, spec):
    """Diagonal mask values for a recorded activation state."""
    s = np.asarray(state, dtype=np.float64)
    if spec.activation == "relu":
        return s
    if spec.activation == "leaky_relu":
        return spec.slope + (1.0 - spec.slope) * s
    if spec.activation == "absolute":
        return s
    raise ConfigError(f"no mask for activation {spec.activation!r}")


def _run_layers(layers, a, bias_enabled, states):
    for layer in layers:
        z = layer.W @ a
        if bias_enabled:
            z = z + layer.b
        if layer.spec.nonlinear:
            st = _layer_state(z, layer.spec)
            states.append(st)
            a = z * state_multiplier(st, layer.spec)
        else:
            a = z
    return a


def forward(model, x, bias_enabled=True):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise ShapeError(f"input shape {x.shape}, expected ({model.input_dim},)")
    states = []
    latent = _run_layers(model.encoder, x, bias_enabled, states)
    output = _run_layers(model.decoder, latent, bias_enabled, states)
    return ForwardTrace(output, RegionCode.from_states(states), latent)


def encode(model, x, bias_enabled=True):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise ShapeError(f"input shape {x.shape}, expected ({model.input_dim},)")
    return _run_layers(model.encoder, x, bias_enabled, [])


def decode(model, z, bias_enabled=True):
    """Decoder-only forward; returns (output, RegionCode over decoder layers)."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (model.latent_dim,):
        raise ShapeError(f"latent shape {z.shape}, expected ({model.latent_dim},)")
    states = []
    y = _run_layers(model.decoder, z, bias_enabled, states)
    return y, RegionCode.from_states(states)


def _run_layers_batch(layers, A, bias_enabled, states):
    for layer in layers:
        Z = A @ layer.W.T
        if bias_enabled:
            Z = Z + layer.b
        if layer.spec.nonlinear:
            st = _layer_state(Z, layer.spec)
            states.append(st)
            A = Z * state_multiplier(st, layer.spec)
        else:
            A = Z
    return A


def forward_batch(model, X, bias_enabled=True):
    """Vectorized forward over rows of X.

    Returns (outputs (n,d), per-layer state arrays (n,width), latents (n,h)).
    Row i reproduces forward(model, X[i]) bitwise (same op order per layer).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise ShapeError(f"batch shape {X.shape}, expected (n, {model.input_dim})")
    states = []
    Z = _run_layers_batch(model.encoder, X, bias_enabled, states)
    Y = _run_layers_batch(model.decoder, Z, bias_enabled, states)
    return Y, states, Z


def code_matrix(states):
    """Stack per-layer state arrays into one (n, total_units) int8 matrix."""
    return np.concatenate([np.asarray(s, dtype=np.int8) for s in states], axis=1)


# ---------------------------------------------------------------------------
# tape staging: mirrors of the numpy forwards that record onto a Tape so the
# trainer and regularizers can differentiate through them.


@dataclass
class TapedLayer:
    spec: LayerSpec
    W: T.Node
    b: object  # Node or None when biases are disabled


@dataclass
class TapedModel:
    encoder: list
    decoder: list
    model: AEModel

    @property
    def layers(self):
        return self.encoder + self.decoder

    def parameters(self):
        """(name, Node) pairs in a fixed order."""
        out = []
        for side, layers in (("enc", self.encoder), ("dec", self.decoder)):
            for i, tl in enumerate(layers):
                out.append((f"{side}{i}.W", tl.W))
                if tl.b is not None:
                    out.append((f"{side}{i}.b", tl.b))
        return out


def stage_on_tape(model, tape, bias_enabled=True):
    """Create weight/bias leaves for every layer of `model` on `tape`."""

    def stage(layers):
        return [
            TapedLayer(l.spec, tape.leaf(l.W), tape.leaf(l.b) if bias_enabled else None)
            for l in layers
        ]

    return TapedModel(stage(model.encoder), stage(model.decoder), model)


def _run_taped(layers, a, ):
    for tl in layers:
        if a.value.ndim == 2:  # batch rows
            z = a @ T.transpose(tl.W)
        else:
            z = tl.W @ a
        if tl.b is not None:
            z = z + tl.b
        if tl.spec.activation == "relu":
            a = T.relu(z)
        elif tl.spec.activation == "leaky_relu":
            a = T.leaky_relu(z, tl.spec.slope)
        elif tl.spec.activation == "absolute":
            a = T.absolute(z)
        else:
            a = z
    return a


def taped_forward(tm, X):
    """Forward a constant batch (n,d) or vector (d,) through the taped model."""
    x = X if isinstance(X, T.Node) else tm.encoder[0].W.tape.constant(X)
    return _run_taped(tm.decoder, _run_taped(tm.encoder, x))


def taped_encode(tm, X):
    x = X if isinstance(X, T.Node) else tm.encoder[0].W.tape.constant(X)
    return _run_taped(tm.encoder, x)


def taped_decode(tm, z):
    z = z if isinstance(z, T.Node) else tm.encoder[0].W.tape.constant(z)
    return _run_taped(tm.decoder, z)


def _taped_affine(taped_layers, code, tape):
    """Per-region affine slope/offset of a taped layer chain, masks frozen.

    Returns (A, B) Nodes with A = Q_l W_l ... Q_1 W_1 and B accumulating the
    bias terms; code supplies the (constant) masks.
    """
    states = list(code.states())
    specs = [tl.spec for tl in taped_layers]
    if len(states) != sum(1 for s in specs if s.nonlinear):
        raise ShapeError("code arity does not match layer chain")
    A = None
    B = None
    si = 0
    for tl in taped_layers:
        A = tl.W if A is None else tl.W @ A
        if tl.b is not None:
            B = tl.b if B is None else (tl.W @ B) + tl.b
        elif B is not None:
            B = tl.W @ B
        if tl.spec.nonlinear:
            mult = state_multiplier(states[si], tl.spec)
            si += 1
            col = mult[:, None] if A.value.ndim == 2 else mult
            A = A * tape.constant(col)
            if B is not None:
                B = B * tape.constant(mult)
    return A, B


def taped_decoder_tangent(tm, decoder_code):
    """Decoder slope A^D at a frozen decoder region code, on tape; (d,h)."""
    A, _ = _taped_affine(tm.decoder, decoder_code, tm.decoder[0].W.tape)
    return A


def taped_encoder_affine(tm, encoder_code):
    """Encoder slope A^E at a frozen encoder region code, on tape; (h,d)."""
    A, _ = _taped_affine(tm.encoder, encoder_code, tm.encoder[0].W.tape)
    return A


# ---------------------------------------------------------------------------
# serialization: hex-float encoding is bit-exact for binary64 round trips.


def _encode_array(a):
    return [float(v).hex() for v in np.asarray(a, dtype=np.float64).ravel(order="C")]


def _decode_array(values, shape):
    flat = np.array([float.fromhex(v) for v in values], dtype=np.float64)
    if flat.size != int(np.prod(shape)):
        raise ConfigError(f"array payload size {flat.size} != shape {shape}")
    return flat.reshape(shape)


def model_to_dict(model):
    def side(layers):
        return [
            {
                "in": l.spec.in_dim,
                "out": l.spec.out_dim,
                "activation": l.spec.activation,
                "slope": l.spec.slope,
                "W": _encode_array(l.W),
                "b": _encode_array(l.b),
            }
            for l in layers
        ]

    return {
        "format": "splineae-model-v1",
        "encoder": side(model.encoder),
        "decoder": side(model.decoder),
    }


def model_from_dict(doc):
    if not isinstance(doc, dict) or doc.get("format") != "splineae-model-v1":
        raise IngestionError("not a recognized model document")

    def side(entries):
        layers = []
        for e in entries:
            spec = LayerSpec(int(e["in"]), int(e["out"]), e["activation"], float(e.get("slope", 0.0)))
            W = _decode_array(e["W"], (spec.out_dim, spec.in_dim))
            b = _decode_array(e["b"], (spec.out_dim,))
            layers.append(Layer(spec, W, b))
        return layers

    return AEModel(side(doc["encoder"]), side(doc["decoder"]))
