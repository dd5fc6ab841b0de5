"""Layer classes over the numeric kernels, plus the Network container.

Layers hold parameters; forward passes return an explicit cache consumed by
the matching backward pass, so a layer can be applied to several inputs
concurrently (each call owns its cache). Inputs carry a leading batch axis.
"""
from __future__ import annotations

import numpy as np

from . import ops
from .tensor import ConvSpec, DenseSpec, LstmSpec, ShapeError, count_flops, count_params


def he_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    """Base layer: parameterless unless ``params`` is overridden."""

    def params(self) -> list[np.ndarray]:
        return []

    def param_names(self) -> list[str]:
        return []

    def spec(self):
        return None

    def forward(self, x):
        raise NotImplementedError

    def backward(self, cache, dy, need_dx: bool = True):
        """Return (dx, [param grads] aligned with params())."""
        raise NotImplementedError


class Conv2d(Layer):
    def __init__(self, spec: ConvSpec, rng: np.random.Generator):
        self._spec = spec
        pg = spec.in_channels // spec.groups
        fan_in = pg * spec.kernel_h * spec.kernel_w
        self.w = he_uniform(rng, (spec.out_channels, pg, spec.kernel_h, spec.kernel_w),
                            fan_in)
        self.b = np.zeros(spec.out_channels) if spec.bias else None

    def spec(self):
        return self._spec

    def params(self):
        return [self.w] if self.b is None else [self.w, self.b]

    def param_names(self):
        return ["weight"] if self.b is None else ["weight", "bias"]

    def forward(self, x):
        return ops.conv_forward(x, self.w, self.b, self._spec)

    def backward(self, cache, dy, need_dx: bool = True):
        dx, dw, db = ops.conv_backward(cache, dy, need_dx)
        return dx, [dw] if db is None else [dw, db]


class MaxPool2d(Layer):
    def __init__(self, window, stride=None, ceil_mode: bool = False):
        self.window = window
        self.stride = stride
        self.ceil_mode = ceil_mode

    def forward(self, x):
        return ops.maxpool_forward(x, self.window, self.stride, self.ceil_mode)

    def backward(self, cache, dy, need_dx: bool = True):
        return ops.maxpool_backward(cache, dy), []


class Relu(Layer):
    def forward(self, x):
        return ops.relu_forward(x)

    def backward(self, cache, dy, need_dx: bool = True):
        return ops.relu_backward(cache, dy), []


class Flatten(Layer):
    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, cache, dy, need_dx: bool = True):
        return dy.reshape(cache), []


class Dense(Layer):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        self._spec = DenseSpec(in_features, out_features)
        self.w = he_uniform(rng, (out_features, in_features), in_features)
        self.b = np.zeros(out_features)

    def spec(self):
        return self._spec

    def params(self):
        return [self.w, self.b]

    def param_names(self):
        return ["weight", "bias"]

    def forward(self, x):
        return ops.dense_forward(x, self.w, self.b)

    def backward(self, cache, dy, need_dx: bool = True):
        dx, dw, db = ops.dense_backward(cache, dy)
        return dx, [dw, db]


class Softmax(Layer):
    def forward(self, x):
        return ops.softmax_forward(x)

    def backward(self, cache, dy, need_dx: bool = True):
        return ops.softmax_backward(cache, dy), []


class Lstm(Layer):
    """LSTM over (N, T, F) inputs, returning the final hidden state (N, H)."""

    def __init__(self, spec: LstmSpec, rng: np.random.Generator):
        self._spec = spec
        f, h = spec.input_size, spec.hidden_size
        self.wx = he_uniform(rng, (4 * h, f), f + h)
        self.wh = he_uniform(rng, (4 * h, h), f + h)
        self.b = np.zeros(4 * h)

    def spec(self):
        return self._spec

    def params(self):
        return [self.wx, self.wh, self.b]

    def param_names(self):
        return ["wx", "wh", "bias"]

    def forward(self, x, state=None):
        if x.shape[1] != self._spec.sequence_length:
            raise ShapeError(
                f"sequence length {x.shape[1]} != spec {self._spec.sequence_length}"
            )
        h, _, cache = ops.lstm_forward(x, self.wx, self.wh, self.b, state)
        return h, cache

    def backward(self, cache, dy, need_dx: bool = True):
        dx, dwx, dwh, db = ops.lstm_backward(cache, dy)
        return dx, [dwx, dwh, db]


class BoundedHeads(Layer):
    """Two-column head: tanh bounds column 0 to [-1, 1], sigmoid bounds
    column 1 to [0, 1]."""

    def forward(self, x):
        y = np.empty_like(x)
        y[:, 0] = np.tanh(x[:, 0])
        y[:, 1] = ops.sigmoid(x[:, 1])
        return y, y

    def backward(self, cache, dy, need_dx: bool = True):
        y = cache
        dx = np.empty_like(dy)
        dx[:, 0] = dy[:, 0] * (1.0 - y[:, 0] ** 2)
        dx[:, 1] = dy[:, 1] * y[:, 1] * (1.0 - y[:, 1])
        return dx, []


class SlidingWindows(Layer):
    """(1, L, F) frame features -> (L - T + 1, T, F) stride-1 windows.

    Used by the segment trainer: consecutive windows share T-1 frames, so the
    per-frame trunk runs once per unique frame and this layer fans the shared
    features out to every window (backward scatter-adds the overlaps).
    """

    def __init__(self, t: int):
        self.t = t

    def forward(self, x):
        if x.shape[0] != 1:
            raise ShapeError("SlidingWindows expects a single segment")
        seq = x[0]
        l, f = seq.shape
        if l < self.t:
            raise ShapeError(f"segment of {l} frames shorter than T={self.t}")
        w = l - self.t + 1
        out = np.empty((w, self.t, f), dtype=np.float64)
        for k in range(self.t):
            out[:, k, :] = seq[k:k + w]
        return out, (l, f)

    def backward(self, cache, dy, need_dx: bool = True):
        l, f = cache
        w = l - self.t + 1
        dseq = np.zeros((l, f), dtype=np.float64)
        for k in range(self.t):
            dseq[k:k + w] += dy[:, k, :]
        return dseq[None], []


class SeqTrunk(Layer):
    """Apply an inner layer stack to every frame of an (N, T, ...) sequence.

    Frames are folded into the batch axis, so the trunk parameters are shared
    across time and their gradients accumulate over all frames.
    """

    def __init__(self, layers: list[tuple[str, Layer]]):
        self.layers = layers

    def params(self):
        return [p for _, l in self.layers for p in l.params()]

    def param_names(self):
        return [f"{name}.{pn}" for name, l in self.layers for pn in l.param_names()]

    def forward(self, x):
        n, t = x.shape[0], x.shape[1]
        h = x.reshape(n * t, *x.shape[2:])
        caches = []
        for _, layer in self.layers:
            h, c = layer.forward(h)
            caches.append(c)
        return h.reshape(n, t, -1), (caches, n, t, x.shape)

    def backward(self, cache, dy, need_dx: bool = True):
        caches, n, t, x_shape = cache
        d = dy.reshape(n * t, -1)
        grads_rev = []
        last = len(self.layers) - 1
        for i, ((_, layer), c) in enumerate(
                zip(reversed(self.layers), reversed(caches))):
            d, g = layer.backward(c, d, need_dx=need_dx or i < last)
            grads_rev.append(g)
        grads = [p for g in reversed(grads_rev) for p in g]
        return None if d is None else d.reshape(x_shape), grads


class Network:
    """Named, ordered layer stack with functional forward/backward."""

    def __init__(self, name: str, layers: list[tuple[str, Layer]]):
        self.name = name
        self.layers = layers

    def forward(self, x):
        caches = []
        for _, layer in self.layers:
            x, c = layer.forward(x)
            caches.append(c)
        return x, caches

    def predict(self, x):
        y, _ = self.forward(x)
        return y

    def backward(self, tape, dy, from_logits: bool = False,
                 need_input_grad: bool = False):
        """Reverse pass; ``from_logits`` skips a trailing Softmax because the
        loss already supplies the fused gradient with respect to the logits.
        The gradient w.r.t. the network input is only materialized when
        ``need_input_grad`` is set (training never consumes it)."""
        layers = self.layers
        if from_logits:
            if not isinstance(layers[-1][1], Softmax):
                raise ShapeError("from_logits requires a trailing Softmax layer")
            layers = layers[:-1]
            tape = tape[:-1]
        grads: dict[str, np.ndarray] = {}
        d = dy
        last = len(layers) - 1
        for i, ((name, layer), cache) in enumerate(
                zip(reversed(layers), reversed(tape))):
            d, layer_grads = layer.backward(cache, d,
                                            need_dx=need_input_grad or i < last)
            for pn, g in zip(layer.param_names(), layer_grads):
                grads[f"{name}.{pn}"] = g
        return d, grads

    def param_items(self) -> list[tuple[str, np.ndarray]]:
        items = []
        for name, layer in self.layers:
            for pn, p in zip(layer.param_names(), layer.params()):
                items.append((f"{name}.{pn}", p))
        return items

    def count_params(self) -> int:
        return sum(int(p.size) for _, p in self.param_items())

    def layer_param_counts(self) -> dict[str, int]:
        counts = {}
        for name, layer in self.layers:
            n = sum(int(p.size) for p in layer.params())
            if n:
                counts[name] = n
        return counts

    def describe(self) -> str:
        lines = [f"{self.name}: {self.count_params()} params"]
        for name, layer in self.layers:
            spec = layer.spec()
            extra = f"  [{spec}]" if spec is not None else ""
            lines.append(f"  {name}: {type(layer).__name__}{extra}")
        return "\n".join(lines)


def global_grad_norm(grads: dict[str, np.ndarray]) -> float:
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    return float(np.sqrt(total))


def clip_grads(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place so the global norm is at most max_norm."""
    norm = global_grad_norm(grads)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def _walk_flops(layers, shape) -> tuple[int, tuple]:
    total = 0
    for _, layer in layers:
        if isinstance(layer, SeqTrunk):
            t = shape[0]
            per_frame, out = _walk_flops(layer.layers, shape[1:])
            total += per_frame * t
            shape = (t,) + out
        elif isinstance(layer, Conv2d):
            s = layer.spec()
            oh = ops.conv_out_extent(shape[1], s.kernel_h, s.stride, s.padding)
            ow = ops.conv_out_extent(shape[2], s.kernel_w, s.stride, s.padding)
            total += count_flops(s, oh, ow)
            shape = (s.out_channels, oh, ow)
        elif isinstance(layer, MaxPool2d):
            y, _ = layer.forward(np.zeros((1,) + shape))
            shape = y.shape[1:]
        elif isinstance(layer, Flatten):
            shape = (int(np.prod(shape)),)
        elif isinstance(layer, Dense):
            total += count_flops(layer.spec())
            shape = (layer.spec().out_features,)
        elif isinstance(layer, Lstm):
            total += count_flops(layer.spec())
            shape = (layer.spec().hidden_size,)
    return total, shape


def network_flops(net: Network, input_shape) -> int:
    """Analytic forward FLOPs for one sample through conv/dense/LSTM layers."""
    total, _ = _walk_flops(net.layers, tuple(input_shape))
    return total
