"""Layer specs, parameters and a numpy im2col forward/backward pass.

Tensors are NHWC. Conv weights have shape ``(k, k, c_in, c_out)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigError, ShapeMismatch

N_BINS = 18
MODEL_VERSION = "grasplab-model-1"


@dataclass(frozen=True)
class Conv:
    k: int
    s: int
    c: int
    relu: bool = True
    pad: int = 0

    def to_dict(self):
        return {"type": "conv", "k": self.k, "s": self.s, "c": self.c, "relu": self.relu, "pad": self.pad}


@dataclass(frozen=True)
class MaxPool:
    k: int
    s: int

    def to_dict(self):
        return {"type": "maxpool", "k": self.k, "s": self.s}


def layer_from_dict(d):
    d = dict(d)
    kind = d.pop("type")
    if kind == "conv":
        return Conv(**d)
    if kind == "maxpool":
        return MaxPool(**d)
    raise ConfigError(f"unknown layer type {kind!r}")


@dataclass(frozen=True)
class NetSpec:
    input_size: int
    layers: tuple
    in_channels: int = 3
    n_bins: int = N_BINS

    def __post_init__(self):
        layers = tuple(layer_from_dict(l) if isinstance(l, dict) else l for l in self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ConfigError("network needs at least one layer")
        last = layers[-1]
        if not (isinstance(last, Conv) and last.k == 1 and last.s == 1 and last.c == 2 * self.n_bins
                and not last.relu and last.pad == 0):
            raise ConfigError(f"final layer must be Conv(1, 1, {2 * self.n_bins}) without activation")
        for l in layers:
            if l.k < 1 or l.s < 1:
                raise ConfigError(f"bad layer {l}")
        # zero padding lets a padded trunk see past its input, so only unpadded nets are bounded
        if not self.padded and self.receptive_field > self.input_size:
            raise ConfigError("receptive field exceeds network input size")
        if self.output_size(self.input_size) != 1:
            raise ConfigError(f"input {self.input_size} does not reduce to a single output cell")

    @property
    def receptive_field(self):
        rf, jump = 1, 1
        for l in self.layers:
            rf += (l.k - 1) * jump
            jump *= l.s
        return rf

    @property
    def total_stride(self):
        s = 1
        for l in self.layers:
            s *= l.s
        return s

    @property
    def offset(self):
        return self.receptive_field // 2

    @property
    def padded(self):
        return any(isinstance(l, Conv) and l.pad for l in self.layers)

    def output_size(self, n):
        for l in self.layers:
            p = l.pad if isinstance(l, Conv) else 0
            n = (n + 2 * p - l.k) // l.s + 1
            if n < 1:
                return 0
        return n

    def conv_layers(self):
        return [l for l in self.layers if isinstance(l, Conv)]

    def to_dict(self):
        return {
            "input_size": self.input_size,
            "in_channels": self.in_channels,
            "n_bins": self.n_bins,
            "layers": [l.to_dict() for l in self.layers],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["input_size"], tuple(layer_from_dict(l) for l in d["layers"]),
                   d.get("in_channels", 3), d.get("n_bins", N_BINS))


def desk_net(n_bins=N_BINS):
    """Small from-scratch net: 32 px input, receptive field 32, stride 8."""
    return NetSpec(32, (Conv(6, 2, 16), MaxPool(2, 2), Conv(3, 2, 32), Conv(3, 1, 64), Conv(1, 1, 2 * n_bins, relu=False)),
                   n_bins=n_bins)


def paper_net(n_bins=N_BINS):
    """AlexNet-style conv1-5 trunk with a 6x6x4096, 1x1x1024, 1x1x36 head (227 px input, stride 32)."""
    return NetSpec(
        227,
        (
            Conv(11, 4, 96), MaxPool(3, 2),
            Conv(5, 1, 256, pad=2), MaxPool(3, 2),
            Conv(3, 1, 384, pad=1), Conv(3, 1, 384, pad=1), Conv(3, 1, 256, pad=1), MaxPool(3, 2),
            Conv(6, 1, 4096), Conv(1, 1, 1024), Conv(1, 1, 2 * n_bins, relu=False),
        ),
        n_bins=n_bins,
    )


@dataclass
class ModelParams:
    net: NetSpec
    weights: list
    biases: list
    seed: int = 0
    version: str = MODEL_VERSION
    meta: dict = field(default_factory=dict)

    @property
    def dtype(self):
        return self.weights[0].dtype

    def astype(self, dtype):
        return ModelParams(self.net, [w.astype(dtype) for w in self.weights], [b.astype(dtype) for b in self.biases],
                           self.seed, self.version, dict(self.meta))

    def copy(self):
        return self.astype(self.dtype)

    def arrays(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def n_params(self):
        return sum(a.size for a in self.arrays())


def init_params(net: NetSpec, seed=0, dtype=np.float32) -> ModelParams:
    """He-normal weights (fan-in scaling) and zero biases from a seeded generator."""
    rng = np.random.default_rng(seed)
    cin = net.in_channels
    ws, bs = [], []
    for l in net.layers:
        if isinstance(l, MaxPool):
            continue
        fan_in = l.k * l.k * cin
        std = np.sqrt((2.0 if l.relu else 1.0) / fan_in)
        ws.append((rng.standard_normal((l.k, l.k, cin, l.c)) * std).astype(dtype))
        bs.append(np.zeros(l.c, dtype=dtype))
        cin = l.c
    return ModelParams(net, ws, bs, seed)


def zero_params(net: NetSpec, dtype=np.float32) -> ModelParams:
    p = init_params(net, 0, dtype)
    return ModelParams(net, [np.zeros_like(w) for w in p.weights], [np.zeros_like(b) for b in p.biases])


# --- forward / backward ------------------------------------------------------


def _windows(x, k, s):
    """``(N, Ho, Wo, k, k, C)`` strided view of the ``k x k`` windows of NHWC ``x``."""
    v = sliding_window_view(x, (k, k), axis=(1, 2))[:, ::s, ::s]
    return v.transpose(0, 1, 2, 4, 5, 3)


def _conv_forward(x, w, b, layer: Conv):
    if layer.pad:
        p = layer.pad
        x = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
    k, s = layer.k, layer.s
    n = x.shape[0]
    win = _windows(x, k, s)
    ho, wo = win.shape[1:3]
    if k == 1:
        cols = win.reshape(n * ho * wo, -1)
    else:
        cols = np.ascontiguousarray(win).reshape(n * ho * wo, -1)
    out = cols @ w.reshape(-1, w.shape[-1])
    out += b
    out = out.reshape(n, ho, wo, -1)
    return out, (cols, x.shape)


def _conv_backward(dout, w, layer: Conv, cache, need_dx=True):
    cols, xshape = cache
    k, s = layer.k, layer.s
    n, ho, wo, co = dout.shape
    d2 = dout.reshape(-1, co)
    dw = (cols.T @ d2).reshape(w.shape)
    db = d2.sum(axis=0)
    if not need_dx:
        return None, dw, db
    dcols = (d2 @ w.reshape(-1, co).T).reshape(n, ho, wo, k, k, xshape[3])
    dx = np.zeros(xshape, dtype=dout.dtype)
    for i in range(k):
        for j in range(k):
            dx[:, i : i + s * (ho - 1) + 1 : s, j : j + s * (wo - 1) + 1 : s, :] += dcols[:, :, :, i, j, :]
    if layer.pad:
        p = layer.pad
        dx = dx[:, p:-p, p:-p, :]
    return dx, dw, db


def _pool_forward(x, layer: MaxPool):
    k, s = layer.k, layer.s
    win = _windows(x, k, s)
    n, ho, wo = win.shape[:3]
    flat = win.reshape(n, ho, wo, k * k, x.shape[3])
    arg = flat.argmax(axis=3)
    out = np.take_along_axis(flat, arg[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return out, (arg, x.shape)


def _pool_backward(dout, layer: MaxPool, cache):
    arg, xshape = cache
    k, s = layer.k, layer.s
    n, ho, wo, c = dout.shape
    dx = np.zeros(xshape, dtype=dout.dtype)
    ki, kj = np.divmod(arg, k)
    nn, ii, jj, cc = np.meshgrid(np.arange(n), np.arange(ho), np.arange(wo), np.arange(c), indexing="ij")
    np.add.at(dx, (nn, ii * s + ki, jj * s + kj, cc), dout)
    return dx


def check_input(net: NetSpec, x):
    if x.ndim != 4 or x.shape[3] != net.in_channels:
        raise ShapeMismatch(f"expected NHWC input with {net.in_channels} channels, got {x.shape}")
    need = net.input_size if net.padded else net.receptive_field
    if min(x.shape[1:3]) < need or net.output_size(min(x.shape[1:3])) < 1:
        raise ShapeMismatch(f"input {x.shape[1:3]} smaller than the network's {need} px window")


def forward(params: ModelParams, x, keep=False):
    """Logits ``(N, H', W', 2 * n_bins)`` for NHWC input ``x``.

    With ``keep=True`` also returns the per-layer caches for :func:`backward`.
    """
    x = np.asarray(x)
    if x.ndim == 3:
        x = x[None]
    check_input(params.net, x)
    x = x.astype(params.dtype, copy=False)
    caches = []
    ci = 0
    for layer in params.net.layers:
        if isinstance(layer, Conv):
            x, cache = _conv_forward(x, params.weights[ci], params.biases[ci], layer)
            if layer.relu:
                np.maximum(x, 0, out=x)
            caches.append((ci, cache, x if layer.relu else None))
            ci += 1
        else:
            x, cache = _pool_forward(x, layer)
            caches.append((None, cache, None))
    return (x, caches) if keep else x


def backward(params: ModelParams, dlogits, caches):
    """Gradients ``(dweights, dbiases)`` given ``dL/dlogits`` and forward caches."""
    dw = [None] * len(params.weights)
    db = [None] * len(params.biases)
    g = dlogits
    for depth, (layer, (ci, cache, act)) in enumerate(zip(reversed(params.net.layers), reversed(caches))):
        if isinstance(layer, Conv):
            if act is not None:
                g = g * (act > 0)
            first = depth == len(caches) - 1
            g, dw[ci], db[ci] = _conv_backward(g, params.weights[ci], layer, cache, need_dx=not first)
        else:
            g = _pool_backward(g, layer, cache)
    return dw, db
