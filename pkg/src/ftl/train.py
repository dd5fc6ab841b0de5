"""Shuffled minibatch SGD with a static learning rate, plus checkpoint I/O."""
from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .layers import Network, clip_grads
from .losses import additive_l2_batch, cross_entropy_batch
from .tensor import ConfigError, ShapeError


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the epoch/batch where it happened."""


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 1
    batch_size: int = 8
    seed: int = 0
    loss_kind: str = "cross_entropy"  # or "additive_l2"
    clip_norm: float | None = None
    log_every: int | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if self.loss_kind not in ("cross_entropy", "additive_l2"):
            raise ConfigError(f"unknown loss_kind {self.loss_kind!r}")


def sgd_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             learning_rate: float) -> None:
    """In-place p <- p - lr * g for every named parameter."""
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"grad {name} shape {g.shape} != param {p.shape}")
        p -= learning_rate * g


def train(net: Network, dataset, config: TrainConfig,
          progress=None) -> list[float]:
    """Run epochs of shuffled minibatch SGD; returns per-epoch mean losses.

    ``dataset`` is indexable, yielding (input, target) pairs; targets are
    class indices for cross-entropy and float pairs for additive L2.
    """
    n = len(dataset)
    if n == 0:
        raise ConfigError("dataset is empty")
    params = dict(net.param_items())
    rng = np.random.default_rng(config.seed)
    history: list[float] = []
    fused_ce = config.loss_kind == "cross_entropy"
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xs, ys = zip(*(dataset[int(i)] for i in idx))
            x = np.stack(xs)
            out, tape = net.forward(x)
            if fused_ce:
                labels = np.asarray(ys, dtype=np.int64)
                loss, dout = cross_entropy_batch(out, labels)
            else:
                targets = np.stack(ys)
                if targets.shape != out.shape:  # segment items carry a batch axis
                    targets = targets.reshape(out.shape)
                loss, dout = additive_l2_batch(out, targets)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}"
                )
            _, grads = net.backward(tape, dout, from_logits=fused_ce)
            if config.clip_norm is not None:
                clip_grads(grads, config.clip_norm)
            sgd_step(params, grads, config.learning_rate)
            epoch_loss += loss * len(idx)
        history.append(epoch_loss / n)
        if progress is not None:
            progress(epoch, history[-1])
        if config.log_every and (epoch + 1) % config.log_every == 0:
            print(f"[{net.name}] epoch {epoch + 1}/{config.epochs} "
                  f"loss {history[-1]:.6f}")
    return history


# ---------------------------------------------------------------------------
# checkpoint container: magic, metadata text block, then per-parameter
# shape headers and little-endian float64 payloads in declaration order.

CKPT_MAGIC = b"FTLCKPT1"


def save_checkpoint(path, net: Network, meta: dict | None = None) -> None:
    meta = dict(meta or {})
    meta.setdefault("arch", net.name)
    items = net.param_items()
    buf = io.BytesIO()
    buf.write(CKPT_MAGIC)
    meta_text = json.dumps(meta, sort_keys=True).encode()
    buf.write(struct.pack("<I", len(meta_text)))
    buf.write(meta_text)
    buf.write(struct.pack("<I", len(items)))
    for name, p in items:
        nb = name.encode()
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<B", p.ndim))
        for d in p.shape:
            buf.write(struct.pack("<I", d))
        buf.write(np.ascontiguousarray(p, dtype="<f8").tobytes())
    with open(path, "wb") as f:
        f.write(buf.getvalue())


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:8] != CKPT_MAGIC:
        raise ConfigError(f"{path}: not a checkpoint (bad magic)")
    off = 8
    (meta_len,) = struct.unpack_from("<I", raw, off)
    off += 4
    meta = json.loads(raw[off:off + meta_len].decode())
    off += meta_len
    (n_params,) = struct.unpack_from("<I", raw, off)
    off += 4
    params: dict[str, np.ndarray] = {}
    for _ in range(n_params):
        (name_len,) = struct.unpack_from("<H", raw, off)
        off += 2
        name = raw[off:off + name_len].decode()
        off += name_len
        (ndim,) = struct.unpack_from("<B", raw, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}I", raw, off)
        off += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape)
        off += 8 * count
        params[name] = arr.astype(np.float64)
    return meta, params


def restore_params(net: Network, params: dict[str, np.ndarray]) -> None:
    """Copy a loaded parameter dict into a network, strict on names/shapes."""
    own = dict(net.param_items())
    if set(own) != set(params):
        missing = set(own) ^ set(params)
        raise ConfigError(f"checkpoint/network parameter mismatch: {sorted(missing)}")
    for name, p in own.items():
        if params[name].shape != p.shape:
            raise ShapeError(
                f"{name}: checkpoint shape {params[name].shape} != {p.shape}"
            )
        p[...] = params[name]
