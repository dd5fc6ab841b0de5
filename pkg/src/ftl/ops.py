"""Numeric kernels: cross-correlation, (grouped) convolution, pooling, dense,
activations and the LSTM recurrence, each with a batched forward/backward pair.

Public single-image entry points (``xcorr2d``, ``conv2d``, ``grouped_conv2d``,
``maxpool2d``, ``dense``, ``relu``, ``softmax``, ``lstm_sequence``) operate on
CHW / flat tensors; the ``*_forward`` / ``*_backward`` pairs carry an explicit
cache and an extra leading batch axis, and are what the layer classes use.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ConvSpec, LstmSpec, ShapeError, as_array, conv_out_extent


# ---------------------------------------------------------------------------
# padding / im2col plumbing

def _pad_spatial(x: np.ndarray, pad: int, value: float = 0.0) -> np.ndarray:
    if pad == 0:
        return x
    widths = [(0, 0)] * (x.ndim - 2) + [(pad, pad), (pad, pad)]
    return np.pad(x, widths, mode="constant", constant_values=value)


def im2col(x: np.ndarray, kh: int, kw: int, stride: int, padding: int):
    """(N, C, H, W) -> patch matrix (N*oh*ow, C*kh*kw), channel-major columns.

    Channel-major column order keeps each channel group a contiguous column
    block, so grouped convolutions can slice the same patch matrix.
    """
    n, c, h, w = x.shape
    oh = conv_out_extent(h, kh, stride, padding)
    ow = conv_out_extent(w, kw, stride, padding)
    xp = _pad_spatial(x, padding)
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
    return np.ascontiguousarray(cols), (oh, ow)


def col2im(dcols: np.ndarray, x_shape, kh: int, kw: int, stride: int, padding: int):
    """Scatter-add patch-matrix gradients back to (N, C, H, W)."""
    n, c, h, w = x_shape
    hp, wp = h + 2 * padding, w + 2 * padding
    oh = conv_out_extent(h, kh, stride, padding)
    ow = conv_out_extent(w, kw, stride, padding)
    d = dcols.reshape(n, oh, ow, c, kh, kw).transpose(0, 3, 1, 2, 4, 5)
    dxp = np.zeros((n, c, hp, wp), dtype=np.float64)
    for i in range(kh):
        rows = slice(i, i + (oh - 1) * stride + 1, stride)
        for j in range(kw):
            cols_ = slice(j, j + (ow - 1) * stride + 1, stride)
            dxp[:, :, rows, cols_] += d[:, :, :, :, i, j]
    if padding:
        return dxp[:, :, padding:-padding, padding:-padding]
    return dxp


# ---------------------------------------------------------------------------
# convolution

def conv_forward(x: np.ndarray, weights: np.ndarray, bias, spec: ConvSpec):
    """Batched grouped convolution. x: (N, P, H, W); weights: (Z, P/G, kh, kw)."""
    n, p, h, w = x.shape
    if p != spec.in_channels:
        raise ShapeError(f"input has {p} channels, spec expects {spec.in_channels}")
    z, g = spec.out_channels, spec.groups
    zg, pg = z // g, p // g
    if weights.shape != (z, pg, spec.kernel_h, spec.kernel_w):
        raise ShapeError(
            f"weights {weights.shape} do not match spec "
            f"({z}, {pg}, {spec.kernel_h}, {spec.kernel_w})"
        )
    cols, (oh, ow) = im2col(x, spec.kernel_h, spec.kernel_w, spec.stride, spec.padding)
    ksz = pg * spec.kernel_h * spec.kernel_w
    out = np.empty((n * oh * ow, z), dtype=np.float64)
    for gi in range(g):
        wmat = weights[gi * zg:(gi + 1) * zg].reshape(zg, ksz)
        out[:, gi * zg:(gi + 1) * zg] = cols[:, gi * ksz:(gi + 1) * ksz] @ wmat.T
    if bias is not None:
        out += bias
    y = out.reshape(n, oh, ow, z).transpose(0, 3, 1, 2)
    cache = (cols, x.shape, weights, spec, (oh, ow))
    return np.ascontiguousarray(y), cache


def conv_backward(cache, dy: np.ndarray, need_dx: bool = True):
    """Gradients of conv_forward: returns (dx, dweights, dbias).

    need_dx=False skips the input-gradient scatter, which an entry layer
    never consumes.
    """
    cols, x_shape, weights, spec, (oh, ow) = cache
    n = x_shape[0]
    z, g = spec.out_channels, spec.groups
    zg = z // g
    ksz = (spec.in_channels // g) * spec.kernel_h * spec.kernel_w
    dymat = dy.transpose(0, 2, 3, 1).reshape(n * oh * ow, z)
    dw = np.empty_like(weights)
    dcols = np.empty_like(cols) if need_dx else None
    for gi in range(g):
        wmat = weights[gi * zg:(gi + 1) * zg].reshape(zg, ksz)
        dyg = dymat[:, gi * zg:(gi + 1) * zg]
        dw[gi * zg:(gi + 1) * zg] = (dyg.T @ cols[:, gi * ksz:(gi + 1) * ksz]).reshape(
            dw[gi * zg:(gi + 1) * zg].shape
        )
        if need_dx:
            dcols[:, gi * ksz:(gi + 1) * ksz] = dyg @ wmat
    db = dymat.sum(axis=0) if spec.bias else None
    dx = None
    if need_dx:
        dx = col2im(dcols, x_shape, spec.kernel_h, spec.kernel_w,
                    spec.stride, spec.padding)
    return dx, dw, db


# ---------------------------------------------------------------------------
# max pooling

def maxpool_forward(x: np.ndarray, window, stride=None, ceil_mode: bool = False):
    """Batched per-channel windowed maximum with argmax retained for backward.

    ceil_mode pads the bottom/right edges (excluded from the max) so the
    output extent is ceil((in - window) / stride) + 1; with window == stride
    that is ceil(in / stride).
    """
    wh, ww = (window, window) if np.isscalar(window) else tuple(window)
    if stride is None:
        sh, sw = wh, ww
    else:
        sh, sw = (stride, stride) if np.isscalar(stride) else tuple(stride)
    n, c, h, w = x.shape
    if wh > h or ww > w:
        if not ceil_mode:
            raise ShapeError(f"pool window ({wh},{ww}) exceeds input ({h},{w})")
    if ceil_mode:
        oh = max(1, -(-(h - wh) // sh) + 1)
        ow = max(1, -(-(w - ww) // sw) + 1)
        pad_h = (oh - 1) * sh + wh - h
        pad_w = (ow - 1) * sw + ww - w
        if pad_h >= wh or pad_w >= ww:
            raise ShapeError("pool padding would cover a full window")
        xp = np.pad(x, [(0, 0), (0, 0), (0, pad_h), (0, pad_w)],
                    mode="constant", constant_values=-np.inf)
    else:
        oh = (h - wh) // sh + 1
        ow = (w - ww) // sw + 1
        xp = x
    win = sliding_window_view(xp, (wh, ww), axis=(2, 3))[:, :, ::sh, ::sw]
    flat = win.reshape(n, c, oh, ow, wh * ww)
    arg = flat.argmax(axis=-1)
    y = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    cache = (x.shape, xp.shape, arg, (wh, ww), (sh, sw))
    return np.ascontiguousarray(y), cache


def maxpool_backward(cache, dy: np.ndarray) -> np.ndarray:
    """Route gradients to the argmax positions (scatter-add for overlaps)."""
    x_shape, xp_shape, arg, (wh, ww), (sh, sw) = cache
    n, c, h, w = x_shape
    hp, wp = xp_shape[2], xp_shape[3]
    oh, ow = arg.shape[2], arg.shape[3]
    ai, aj = np.divmod(arg, ww)
    rows = ai + np.arange(oh).reshape(1, 1, oh, 1) * sh
    cols = aj + np.arange(ow).reshape(1, 1, 1, ow) * sw
    flat_pos = rows * wp + cols
    dxp = np.zeros((n, c, hp * wp), dtype=np.float64)
    ni = np.arange(n).reshape(n, 1, 1, 1)
    ci = np.arange(c).reshape(1, c, 1, 1)
    np.add.at(dxp, (ni, ci, flat_pos), dy)
    return dxp.reshape(n, c, hp, wp)[:, :, :h, :w]


# ---------------------------------------------------------------------------
# dense / activations

def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray):
    """x: (N, F_in); weights: (F_out, F_in); bias: (F_out,)."""
    if x.shape[1] != weights.shape[1]:
        raise ShapeError(f"dense input {x.shape[1]} != weight inner {weights.shape[1]}")
    y = x @ weights.T + bias
    return y, (x, weights)


def dense_backward(cache, dy: np.ndarray):
    x, weights = cache
    dw = dy.T @ x
    db = dy.sum(axis=0)
    dx = dy @ weights
    return dx, dw, db


def relu_forward(x: np.ndarray):
    y = np.maximum(x, 0.0)
    return y, (x > 0.0)


def relu_backward(cache, dy: np.ndarray) -> np.ndarray:
    return dy * cache


def softmax_forward(x: np.ndarray):
    """Row-wise softmax with max-subtraction; strictly positive rows summing to 1."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    return y, y


def softmax_backward(cache, dy: np.ndarray) -> np.ndarray:
    y = cache
    dot = (dy * y).sum(axis=-1, keepdims=True)
    return y * (dy - dot)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ---------------------------------------------------------------------------
# LSTM

def lstm_init_state(n: int, hidden: int):
    z = np.zeros((n, hidden), dtype=np.float64)
    return z, z.copy()


def lstm_forward(x: np.ndarray, wx: np.ndarray, wh: np.ndarray, b: np.ndarray,
                 state=None):
    """Run the LSTM recurrence over (N, T, F); returns the final hidden state.

    Gate rows of wx/wh/b are ordered [input, forget, candidate, output].
    """
    n, t, f = x.shape
    hsz = wh.shape[1]
    if wx.shape != (4 * hsz, f):
        raise ShapeError(f"wx {wx.shape} does not match input size {f}, hidden {hsz}")
    if state is None:
        h, c = lstm_init_state(n, hsz)
    else:
        h, c = state[0].copy(), state[1].copy()
    steps = []
    for ti in range(t):
        xt = x[:, ti, :]
        z = xt @ wx.T + h @ wh.T + b
        i = sigmoid(z[:, 0 * hsz:1 * hsz])
        fg = sigmoid(z[:, 1 * hsz:2 * hsz])
        g = np.tanh(z[:, 2 * hsz:3 * hsz])
        o = sigmoid(z[:, 3 * hsz:4 * hsz])
        c_new = fg * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        steps.append((xt, h, c, i, fg, g, o, tc))
        h, c = h_new, c_new
    cache = (steps, wx, wh, x.shape)
    return h, (h, c), cache


def lstm_backward(cache, dh_last: np.ndarray):
    """BPTT from the gradient of the final hidden state only.

    Per-step gate gradients are stacked and reduced with single matmuls at
    the end; with a wide input (F = 6144) that avoids T separate rank-N
    updates of the big weight matrix.
    """
    steps, wx, wh, x_shape = cache
    n, t, f = x_shape
    hsz = wh.shape[1]
    dx = np.empty(x_shape, dtype=np.float64)
    dzs = np.empty((t, n, 4 * hsz), dtype=np.float64)
    dh = dh_last.copy()
    dc = np.zeros_like(dh)
    for ti in range(t - 1, -1, -1):
        xt, h_prev, c_prev, i, fg, g, o, tc = steps[ti]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dz = dzs[ti]
        dz[:, 0 * hsz:1 * hsz] = di * i * (1.0 - i)
        dz[:, 1 * hsz:2 * hsz] = df * fg * (1.0 - fg)
        dz[:, 2 * hsz:3 * hsz] = dg * (1.0 - g * g)
        dz[:, 3 * hsz:4 * hsz] = do * o * (1.0 - o)
        dx[:, ti, :] = dz @ wx
        dh = dz @ wh
        dc = dc * fg
    x_all = np.stack([s[0] for s in steps]).reshape(t * n, f)
    h_all = np.stack([s[1] for s in steps]).reshape(t * n, hsz)
    dz_all = dzs.reshape(t * n, 4 * hsz)
    dwx = dz_all.T @ x_all
    dwh = dz_all.T @ h_all
    db = dz_all.sum(axis=0)
    return dx, dwx, dwh, db


# ---------------------------------------------------------------------------
# public single-image operations

def xcorr2d(image, kernel, stride: int = 1, padding: int = 0) -> np.ndarray:
    """Discrete 2-D cross-correlation of a single-channel image with a kernel."""
    img = as_array(image)
    ker = as_array(kernel)
    if img.ndim != 2 or ker.ndim != 2:
        raise ShapeError("xcorr2d expects 2-D image and kernel")
    spec = ConvSpec(1, 1, ker.shape[0], ker.shape[1], stride=stride,
                    padding=padding, bias=False)
    y, _ = conv_forward(img[None, None], ker[None, None], None, spec)
    return y[0, 0]


def conv2d(image, weights, bias, spec: ConvSpec) -> np.ndarray:
    """Conventional convolution (spec.groups == 1) of a CHW image."""
    y, _ = conv_forward(as_array(image)[None], as_array(weights),
                        None if bias is None else as_array(bias), spec)
    return y[0]


def grouped_conv2d(image, weights, bias, spec: ConvSpec) -> np.ndarray:
    """Grouped convolution: per-group filters, outputs concatenated in group order."""
    return conv2d(image, weights, bias, spec)


def maxpool2d(image, window, stride=None, ceil_mode: bool = False) -> np.ndarray:
    """Per-channel windowed maximum of a CHW image."""
    y, _ = maxpool_forward(as_array(image)[None], window, stride, ceil_mode)
    return y[0]


def dense(x, weights, bias) -> np.ndarray:
    """Affine map of a flat vector: weights @ x + bias."""
    y, _ = dense_forward(as_array(x)[None], as_array(weights), as_array(bias))
    return y[0]


def relu(x) -> np.ndarray:
    return np.maximum(as_array(x), 0.0)


def softmax(x) -> np.ndarray:
    y, _ = softmax_forward(as_array(x)[None])
    return y[0]


def lstm_sequence(inputs, spec: LstmSpec, params, state=None) -> np.ndarray:
    """Final hidden state of an LSTM over a (T, F) input sequence.

    ``params`` is a (wx, wh, b) triple; initial hidden/cell states are zero
    unless ``state`` supplies them.
    """
    x = as_array(inputs)
    if x.ndim != 2 or x.shape[0] != spec.sequence_length:
        raise ShapeError(
            f"expected ({spec.sequence_length}, {spec.input_size}) sequence, "
            f"got {x.shape}"
        )
    if x.shape[1] != spec.input_size:
        raise ShapeError(f"input size {x.shape[1]} != spec {spec.input_size}")
    wx, wh, b = (as_array(p) for p in params)
    if state is not None:
        state = (as_array(state[0])[None], as_array(state[1])[None])
    h, _, _ = lstm_forward(x[None], wx, wh, b, state)
    return h[0]
