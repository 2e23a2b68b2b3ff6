"""Noise-conditioned dense generator and candidate sampling.

The generator maps an input x and a noise draw z to an output y: dense
encoder layers over x (ReLU), concatenation of the encoder output with z,
dense decoder layers (ReLU), and a final linear layer. Sampling the noise
K times for the same x yields K candidate outputs, i.e. samples from the
model's conditional distribution. With noise disabled the concatenation is
skipped and the network is an ordinary deterministic regressor.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError, ParseError

PARAMS_FORMAT = "disconet-params"
PARAMS_VERSION = 1


@dataclass(frozen=True)
class NetConfig:
    """Generator architecture: layer widths and the noise channel.

    Noise coordinates are drawn i.i.d. uniform on [-1, 1] and concatenated
    after the encoder stack. All hidden layers use ReLU; the output layer
    is linear. The defaults are desk-scale; the full-scale hand-pose setup
    uses z_dim=200 with wider layers.
    """

    x_dim: int
    y_dim: int
    z_dim: int = 8
    encoder_widths: tuple = (64,)
    decoder_widths: tuple = (64, 64)
    noise_enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "encoder_widths", tuple(int(w) for w in self.encoder_widths))
        object.__setattr__(self, "decoder_widths", tuple(int(w) for w in self.decoder_widths))
        dims = (self.x_dim, self.y_dim) + self.encoder_widths + self.decoder_widths
        if any(int(d) < 1 for d in dims):
            raise ContractError(f"all dimensions must be positive, got {dims}")
        if self.noise_enabled and self.z_dim < 1:
            raise ContractError("z_dim must be >= 1 when noise is enabled")

    @property
    def noise_dim(self):
        return self.z_dim if self.noise_enabled else 0

    def layer_dims(self):
        """(fan_in, fan_out) for every dense layer, in forward order."""
        dims = []
        h = self.x_dim
        for w in self.encoder_widths:
            dims.append((h, w))
            h = w
        h += self.noise_dim
        for w in self.decoder_widths:
            dims.append((h, w))
            h = w
        dims.append((h, self.y_dim))
        return dims

    def param_count(self):
        return sum((fi + 1) * fo for fi, fo in self.layer_dims())

    def to_dict(self):
        return {
            "x_dim": self.x_dim,
            "y_dim": self.y_dim,
            "z_dim": self.z_dim,
            "encoder_widths": list(self.encoder_widths),
            "decoder_widths": list(self.decoder_widths),
            "noise_enabled": self.noise_enabled,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            x_dim=int(doc["x_dim"]),
            y_dim=int(doc["y_dim"]),
            z_dim=int(doc["z_dim"]),
            encoder_widths=tuple(doc["encoder_widths"]),
            decoder_widths=tuple(doc["decoder_widths"]),
            noise_enabled=bool(doc["noise_enabled"]),
        )


class NetworkParams:
    """All layer weights and biases, with a flat float64 view for optimizers.

    The flat layout is, per layer in forward order, the row-major weight
    matrix followed by the bias vector.
    """

    def __init__(self, config, layers):
        expected = config.layer_dims()
        if len(layers) != len(expected):
            raise DimensionError(f"expected {len(expected)} layers, got {len(layers)}")
        locked = []
        for (w, b), (fi, fo) in zip(layers, expected):
            w = np.array(w, dtype=np.float64)
            b = np.array(b, dtype=np.float64)
            if w.shape != (fi, fo) or b.shape != (fo,):
                raise DimensionError(
                    f"layer shapes {w.shape}/{b.shape} do not match ({fi},{fo})/({fo},)"
                )
            w.setflags(write=False)
            b.setflags(write=False)
            locked.append((w, b))
        self.config = config
        self.layers = tuple(locked)

    @property
    def size(self):
        return self.config.param_count()

    def to_flat(self):
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in self.layers])

    @classmethod
    def from_flat(cls, config, flat):
        flat = np.asarray(flat, dtype=np.float64).reshape(-1)
        if flat.size != config.param_count():
            raise DimensionError(f"expected {config.param_count()} values, got {flat.size}")
        layers = []
        pos = 0
        for fi, fo in config.layer_dims():
            w = flat[pos : pos + fi * fo].reshape(fi, fo)
            pos += fi * fo
            b = flat[pos : pos + fo]
            pos += fo
            layers.append((w, b))
        return cls(config, layers)

    def weight_mask(self):
        """Boolean flat-view mask: True at weight entries, False at biases."""
        parts = []
        for fi, fo in self.config.layer_dims():
            parts.append(np.ones(fi * fo, dtype=bool))
            parts.append(np.zeros(fo, dtype=bool))
        return np.concatenate(parts)

    def save(self, path):
        """Write the versioned textual checkpoint format.

        Line 1 is a JSON header carrying the format name, version, and the
        architecture; every following line is one flat-view value printed
        with ``repr``, which round-trips float64 exactly.
        """
        header = {
            "format": PARAMS_FORMAT,
            "version": PARAMS_VERSION,
            "net": self.config.to_dict(),
        }
        lines = [json.dumps(header, sort_keys=True)]
        lines.extend(repr(float(v)) for v in self.to_flat())
        with open(path, "w", encoding="utf8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf8") as fh:
            raw = fh.read().splitlines()
        if not raw:
            raise ParseError(f"{path}: empty checkpoint file")
        try:
            header = json.loads(raw[0])
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line 1: bad header: {exc}") from exc
        if not isinstance(header, dict) or header.get("format") != PARAMS_FORMAT:
            raise ParseError(f"{path}: line 1: not a {PARAMS_FORMAT} header")
        if header.get("version") != PARAMS_VERSION:
            raise ParseError(f"{path}: unsupported version {header.get('version')!r}")
        try:
            config = NetConfig.from_dict(header["net"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: bad architecture header: {exc}") from exc
        values = []
        for ln, line in enumerate(raw[1:], start=2):
            if not line.strip():
                continue
            try:
                values.append(float(line))
            except ValueError as exc:
                raise ParseError(f"{path}: line {ln}: not a number: {line!r}") from exc
        if len(values) != config.param_count():
            raise ParseError(
                f"{path}: expected {config.param_count()} values, found {len(values)}"
            )
        return cls.from_flat(config, np.asarray(values))


def init_params(config, seed):
    """Deterministic init: weights uniform on [-a, a] with
    a = sqrt(6 / (fan_in + fan_out)), biases zero."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    layers = []
    for fi, fo in config.layer_dims():
        a = math.sqrt(6.0 / (fi + fo))
        layers.append((rng.uniform(-a, a, size=(fi, fo)), np.zeros(fo)))
    return NetworkParams(config, layers)


def sample_noise(z_dim, rng):
    """One noise vector: coordinates i.i.d. uniform on [-1, 1]."""
    if z_dim < 1:
        raise ContractError("z_dim must be >= 1")
    return rng.uniform(-1.0, 1.0, size=z_dim)


@dataclass
class CandidateSet:
    """K sampled outputs for one input, with the noise draws that made them."""

    index: int
    outputs: np.ndarray
    noises: np.ndarray = None

    def __post_init__(self):
        outs = np.array(self.outputs, dtype=np.float64)
        if outs.ndim != 2 or outs.shape[0] < 1:
            raise ContractError(f"outputs must be a non-empty (K, y_dim) array, got {outs.shape}")
        outs.setflags(write=False)
        object.__setattr__(self, "outputs", outs)
        if self.noises is not None:
            z = np.array(self.noises, dtype=np.float64)
            if z.ndim != 2 or z.shape[0] != outs.shape[0]:
                raise ContractError(f"noises shape {z.shape} does not match K={outs.shape[0]}")
            z.setflags(write=False)
            object.__setattr__(self, "noises", z)

    @property
    def num_candidates(self):
        return self.outputs.shape[0]

    @property
    def y_dim(self):
        return self.outputs.shape[1]


@dataclass
class BoundParams:
    """Network parameters inserted into a graph as constant nodes."""

    config: NetConfig
    nodes: tuple


def bind_params(g, params):
    """Insert every weight and bias into `g`; biases become [1, fan_out] rows."""
    nodes = tuple((g.constant(w), g.constant(b.reshape(1, -1))) for w, b in params.layers)
    return BoundParams(params.config, nodes)


def grad_flat(g, bound):
    """Collect parameter gradients after backward(), in flat-view order."""
    parts = []
    for wid, bid in bound.nodes:
        parts.append(g.grad(wid).array.ravel())
        parts.append(g.grad(bid).array.ravel())
    return np.concatenate(parts)


def forward_rows(g, params, x, z=None):
    """Batched generator pass inside a graph; rows are independent samples.

    `params` is a NetworkParams or an existing BoundParams; `x` and `z`
    are node ids or arrays of shape (R, x_dim) and (R, z_dim). When noise
    is disabled any `z` argument is ignored and the output depends on x
    alone. Returns the node id of the (R, y_dim) output.
    """
    bound = bind_params(g, params) if isinstance(params, NetworkParams) else params
    cfg = bound.config
    xid = x if isinstance(x, (int, np.integer)) else g.constant(np.asarray(x, dtype=np.float64))
    xv = g.value(xid).array
    if xv.ndim != 2 or xv.shape[1] != cfg.x_dim:
        raise DimensionError(f"x must be (rows, {cfg.x_dim}), got {xv.shape}")
    h = xid
    n_enc = len(cfg.encoder_widths)
    for li in range(n_enc):
        wid, bid = bound.nodes[li]
        h = g.relu(g.add(g.matmul(h, wid), bid))
    if cfg.noise_enabled:
        if z is None:
            raise ContractError("noise-enabled network needs z")
        zid = z if isinstance(z, (int, np.integer)) else g.constant(np.asarray(z, dtype=np.float64))
        zv = g.value(zid).array
        if zv.shape != (xv.shape[0], cfg.z_dim):
            raise DimensionError(f"z must be ({xv.shape[0]}, {cfg.z_dim}), got {zv.shape}")
        h = g.concat(h, zid, axis=1)
    for li in range(n_enc, n_enc + len(cfg.decoder_widths)):
        wid, bid = bound.nodes[li]
        h = g.relu(g.add(g.matmul(h, wid), bid))
    wid, bid = bound.nodes[-1]
    return g.add(g.matmul(h, wid), bid)


def forward(g, params, x, z=None):
    """Single-example pass: vector x (and z) in, vector y node out."""
    bound = bind_params(g, params) if isinstance(params, NetworkParams) else params
    cfg = bound.config
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if cfg.noise_enabled:
        if z is None:
            raise ContractError("noise-enabled network needs z")
        z = np.asarray(z, dtype=np.float64).reshape(1, -1)
    rows = forward_rows(g, bound, x, z)
    return g.reshape(rows, (cfg.y_dim,))


def predict_rows(params, x, z=None):
    """Plain-array forward pass, mirroring the graph arithmetic exactly."""
    cfg = params.config
    h = np.asarray(x, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != cfg.x_dim:
        raise DimensionError(f"x must be (rows, {cfg.x_dim}), got {h.shape}")
    li = 0
    for _ in cfg.encoder_widths:
        w, b = params.layers[li]
        li += 1
        h = np.maximum(h @ w + b.reshape(1, -1), 0.0)
    if cfg.noise_enabled:
        if z is None:
            raise ContractError("noise-enabled network needs z")
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (h.shape[0], cfg.z_dim):
            raise DimensionError(f"z must be ({h.shape[0]}, {cfg.z_dim}), got {z.shape}")
        h = np.concatenate([h, z], axis=1)
    for _ in cfg.decoder_widths:
        w, b = params.layers[li]
        li += 1
        h = np.maximum(h @ w + b.reshape(1, -1), 0.0)
    w, b = params.layers[li]
    return h @ w + b.reshape(1, -1)


def predict(params, x, z=None):
    """Single-example plain forward pass; returns a (y_dim,) array."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if params.config.noise_enabled:
        if z is None:
            raise ContractError("noise-enabled network needs z")
        z = np.asarray(z, dtype=np.float64).reshape(1, -1)
        return predict_rows(params, x, z)[0]
    return predict_rows(params, x)[0]


def sample_candidates(params, x, num_candidates, rng, index=0):
    """Draw `num_candidates` noise vectors and run the generator on each.

    With noise disabled no randomness is consumed and all candidates are
    the single deterministic prediction.
    """
    if num_candidates < 1:
        raise ContractError("num_candidates must be >= 1")
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if params.config.noise_enabled:
        z = rng.uniform(-1.0, 1.0, size=(num_candidates, params.config.z_dim))
        outs = predict_rows(params, np.repeat(x, num_candidates, axis=0), z)
        return CandidateSet(index, outs, z)
    out = predict_rows(params, x)
    return CandidateSet(index, np.repeat(out, num_candidates, axis=0), None)
