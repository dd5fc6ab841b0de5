"""Central finite-difference checking of analytic network gradients."""
from __future__ import annotations

import numpy as np

from ftl.layers import Network


def scalar_loss_sum(out):
    """Generic smooth scalar head: weighted sum of outputs."""
    w = np.cos(np.arange(out.size, dtype=np.float64)).reshape(out.shape)
    return float(np.sum(out * w)), w


def fd_check_network(net: Network, x, loss_fn, eps=1e-5, from_logits=False,
                     max_indices=None, seed=0):
    """Compare analytic parameter gradients with central finite differences.

    loss_fn(out) -> (loss, dout). Returns the worst relative error seen,
    where rel err = |a - b| / max(|a|, |b|, 1e-6). ``max_indices`` samples at
    most that many scalar entries per parameter tensor (deterministically).
    """
    out, tape = net.forward(x)
    _, dout = loss_fn(out)
    _, grads = net.backward(tape, dout, from_logits=from_logits)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, p in net.param_items():
        if name not in grads:  # softmax skipped under from_logits has no params
            continue
        analytic = grads[name].reshape(-1)
        flat = p.reshape(-1)
        idx = np.arange(flat.size)
        if max_indices is not None and flat.size > max_indices:
            idx = rng.choice(flat.size, size=max_indices, replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            hi, _ = loss_fn(net.forward(x)[0])
            flat[i] = orig - eps
            lo, _ = loss_fn(net.forward(x)[0])
            flat[i] = orig
            fd = (hi - lo) / (2.0 * eps)
            denom = max(abs(fd), abs(analytic[i]), 1e-6)
            worst = max(worst, abs(fd - analytic[i]) / denom)
    return worst


def fd_check_input(net: Network, x, loss_fn, eps=1e-5, max_indices=200, seed=0):
    """Finite-difference check of the gradient with respect to the input."""
    out, tape = net.forward(x)
    _, dout = loss_fn(out)
    dx, _ = net.backward(tape, dout, need_input_grad=True)
    rng = np.random.default_rng(seed)
    flat = x.reshape(-1)
    danalytic = dx.reshape(-1)
    idx = np.arange(flat.size)
    if flat.size > max_indices:
        idx = rng.choice(flat.size, size=max_indices, replace=False)
    worst = 0.0
    for i in idx:
        orig = flat[i]
        flat[i] = orig + eps
        hi, _ = loss_fn(net.forward(x)[0])
        flat[i] = orig - eps
        lo, _ = loss_fn(net.forward(x)[0])
        flat[i] = orig
        fd = (hi - lo) / (2.0 * eps)
        denom = max(abs(fd), abs(danalytic[i]), 1e-6)
        worst = max(worst, abs(fd - danalytic[i]) / denom)
    return worst
