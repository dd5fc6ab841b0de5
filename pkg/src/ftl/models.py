"""Canonical MCN (pedestrian gate) and RN (steering/throttle regressor) builders.

Both networks share the entry geometry: a strided 3x3 conv, two ceil-mode max
pools, and a non-channel-expanding grouped convolution (cardinality 4, kernel
3, no bias). On the default 6x120x160 input the shared pooling plan lands on a
4x6 grid, which makes the RN flatten width 256 * 24 = 6144.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import ops
from .layers import (
    BoundedHeads,
    Conv2d,
    Dense,
    Flatten,
    Lstm,
    MaxPool2d,
    Network,
    Relu,
    SeqTrunk,
    Softmax,
)
from .tensor import ConfigError, ConvSpec, LstmSpec, ShapeError, same_padding
from .train import load_checkpoint, restore_params

LABEL_ABSENT = 0
LABEL_PRESENT = 1


@dataclass(frozen=True)
class McnConfig:
    input_shape: tuple[int, int, int] = (6, 120, 160)
    conv_channels: tuple[int, int] = (32, 64)
    entry_stride: int = 2
    pool_windows: tuple[tuple[int, int], ...] = ((5, 5), (3, 3))
    groups: int = 4
    grouped_kernel: int = 3
    dense_hidden: int = 32
    n_classes: int = 2

    def __post_init__(self):
        if self.conv_channels[-1] % self.groups:
            raise ConfigError(
                f"grouped block width {self.conv_channels[-1]} not divisible "
                f"by cardinality {self.groups}"
            )
        if len(self.pool_windows) != len(self.conv_channels):
            raise ConfigError("one pool window per conv block")


@dataclass(frozen=True)
class RnConfig:
    input_shape: tuple[int, int, int] = (6, 120, 160)
    conv_channels: tuple[int, int, int] = (32, 64, 256)
    entry_stride: int = 2
    pool_windows: tuple[tuple[int, int], ...] = ((5, 5), (3, 3))
    groups: int = 4
    grouped_kernel: int = 3
    lstm_hidden: int = 60
    sequence_length: int = 5

    def __post_init__(self):
        if self.conv_channels[-1] % self.groups:
            raise ConfigError(
                f"grouped block width {self.conv_channels[-1]} not divisible "
                f"by cardinality {self.groups}"
            )

    @property
    def pooled_hw(self) -> tuple[int, int]:
        return _trunk_spatial(self.input_shape, self.entry_stride, self.pool_windows)

    @property
    def pooled_area(self) -> int:
        h, w = self.pooled_hw
        return h * w

    @property
    def flatten_size(self) -> int:
        return self.conv_channels[-1] * self.pooled_area


def _trunk_spatial(input_shape, entry_stride, pool_windows) -> tuple[int, int]:
    _, h, w = input_shape
    h = ops.conv_out_extent(h, 3, entry_stride, same_padding(3))
    w = ops.conv_out_extent(w, 3, entry_stride, same_padding(3))
    for wh, ww in pool_windows:
        h = -(-h // wh)
        w = -(-w // ww)
    return h, w


def _conv(name, in_ch, out_ch, stride, rng):
    spec = ConvSpec(in_ch, out_ch, 3, 3, stride=stride, padding=same_padding(3))
    return (name, Conv2d(spec, rng))


def _grouped_conv(name, channels, kernel, groups, rng):
    # the grouped block (and its standard-conv counterpart) carries no bias;
    # this is what lands the canonical totals on the reconstructed counts
    spec = ConvSpec(channels, channels, kernel, kernel, stride=1,
                    padding=same_padding(kernel), groups=groups, bias=False)
    return (name, Conv2d(spec, rng))


def build_mcn(cfg: McnConfig = None, seed: int = 0, variant: str = "grouped") -> Network:
    """Gate classifier: conv+pool, conv+pool, grouped conv, pool, dense, dense,
    softmax. Output is (p_absent, p_present).

    ReLUs sit after each block's pool; max-pooling commutes with the monotone
    ReLU, so this computes the conventional conv-relu-pool function while
    activating 25x fewer elements at the entry resolution.
    """
    cfg = cfg or McnConfig()
    rng = np.random.default_rng(seed)
    groups = _variant_groups(variant, cfg.groups)
    c1, c2 = cfg.conv_channels
    spatial = _trunk_spatial(cfg.input_shape, cfg.entry_stride, cfg.pool_windows)
    layers = [
        _conv("conv1", cfg.input_shape[0], c1, cfg.entry_stride, rng),
        ("pool1", MaxPool2d(cfg.pool_windows[0], ceil_mode=True)),
        ("relu1", Relu()),
        _conv("conv2", c1, c2, 1, rng),
        ("pool2", MaxPool2d(cfg.pool_windows[1], ceil_mode=True)),
        ("relu2", Relu()),
        _grouped_conv("gconv", c2, cfg.grouped_kernel, groups, rng),
        ("pool3", MaxPool2d(spatial)),
        ("relu3", Relu()),
        ("flatten", Flatten()),
        ("fc1", Dense(c2, cfg.dense_hidden, rng)),
        ("fc1_relu", Relu()),
        ("fc2", Dense(cfg.dense_hidden, cfg.n_classes, rng)),
        ("softmax", Softmax()),
    ]
    net = Network("mcn", layers)
    net.config = cfg
    net.variant = variant
    return net


def build_rn(cfg: RnConfig = None, seed: int = 0, variant: str = "grouped") -> Network:
    """Regressor: three conv blocks and a grouped conv per frame, an LSTM over
    the frame sequence, then a bounded (steering, throttle) head."""
    cfg = cfg or RnConfig()
    rng = np.random.default_rng(seed)
    groups = _variant_groups(variant, cfg.groups)
    c1, c2, c3 = cfg.conv_channels
    trunk = [
        _conv("conv1", cfg.input_shape[0], c1, cfg.entry_stride, rng),
        ("pool1", MaxPool2d(cfg.pool_windows[0], ceil_mode=True)),
        ("relu1", Relu()),
        _conv("conv2", c1, c2, 1, rng),
        ("pool2", MaxPool2d(cfg.pool_windows[1], ceil_mode=True)),
        ("relu2", Relu()),
        _conv("conv3", c2, c3, 1, rng),
        ("relu3", Relu()),
        _grouped_conv("gconv", c3, cfg.grouped_kernel, groups, rng),
        ("grelu", Relu()),
        ("flatten", Flatten()),
    ]
    lstm_spec = LstmSpec(cfg.flatten_size, cfg.lstm_hidden, cfg.sequence_length)
    layers = [
        ("trunk", SeqTrunk(trunk)),
        ("lstm", Lstm(lstm_spec, rng)),
        ("head", Dense(cfg.lstm_hidden, 2, rng)),
        ("bounds", BoundedHeads()),
    ]
    net = Network("rn", layers)
    net.config = cfg
    net.variant = variant
    return net


def _variant_groups(variant: str, groups: int) -> int:
    if variant == "grouped":
        return groups
    if variant == "standard":
        return 1
    raise ConfigError(f"unknown variant {variant!r}")


def build_rn_trainer(cfg: RnConfig = None, seed: int = 0,
                     variant: str = "grouped") -> Network:
    """RN wired for segment training: one input segment of L frames yields
    all L-T+1 stride-1 windows, sharing the per-frame trunk work and the
    parameters (and their checkpoint names) with the canonical RN."""
    from .layers import SlidingWindows

    net = build_rn(cfg, seed, variant)
    cfg = net.config
    layers = dict(net.layers)
    trainer = Network("rn", [
        ("trunk", layers["trunk"]),
        ("windows", SlidingWindows(cfg.sequence_length)),
        ("lstm", layers["lstm"]),
        ("head", layers["head"]),
        ("bounds", layers["bounds"]),
    ])
    trainer.config = cfg
    trainer.variant = variant
    return trainer


def mcn_infer(net: Network, image) -> tuple[float, float]:
    """Classify one normalized 6-channel image; returns (p_present, p_absent)."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] != net.config.input_shape[0]:
        raise ShapeError(f"expected {net.config.input_shape} image, got {img.shape}")
    probs = net.predict(img[None])[0]
    return float(probs[LABEL_PRESENT]), float(probs[LABEL_ABSENT])


def mcn_present(p_present: float, p_absent: float) -> bool:
    """Gate decision; an exact tie counts as absent (fail toward search)."""
    return p_present > p_absent


def rn_infer(net: Network, frames, carry=None):
    """Run the regressor on a window of exactly T frames.

    Returns (steering in [-1, 1], throttle in [0, 1], new LSTM carry state).
    Callers with an underfull window must pad it by repeating the oldest frame.
    """
    x = np.asarray(frames, dtype=np.float64)
    t = net.config.sequence_length
    if x.ndim != 4 or x.shape[0] != t:
        raise ShapeError(f"expected {t}-frame window, got shape {x.shape}")
    x = x[None]
    new_carry = carry
    for _, layer in net.layers:
        if isinstance(layer, Lstm):
            state = None
            if carry is not None:
                state = (np.asarray(carry[0])[None], np.asarray(carry[1])[None])
            h, (hn, cn), _ = ops.lstm_forward(x, layer.wx, layer.wh, layer.b, state)
            x = h
            new_carry = (hn[0].copy(), cn[0].copy())
        else:
            x, _ = layer.forward(x)
    out = x[0]
    return float(out[0]), float(out[1]), new_carry


def model_meta(net: Network, seed: int, epoch: int, extra: dict | None = None) -> dict:
    meta = {
        "arch": net.name,
        "variant": net.variant,
        "config": asdict(net.config),
        "seed": seed,
        "epoch": epoch,
    }
    if extra:
        meta.update(extra)
    return meta


def _config_from_meta(meta: dict):
    cfg = dict(meta["config"])
    for key in ("input_shape", "conv_channels"):
        cfg[key] = tuple(cfg[key])
    cfg["pool_windows"] = tuple(tuple(p) for p in cfg["pool_windows"])
    if meta["arch"] == "mcn":
        return McnConfig(**cfg)
    return RnConfig(**cfg)


def load_model(path) -> Network:
    """Rebuild a network from a checkpoint file and restore its parameters."""
    meta, params = load_checkpoint(path)
    arch = meta.get("arch")
    if arch not in ("mcn", "rn"):
        raise ConfigError(f"{path}: unknown architecture {arch!r}")
    builder = build_mcn if arch == "mcn" else build_rn
    net = builder(_config_from_meta(meta), seed=int(meta.get("seed", 0)),
                  variant=meta.get("variant", "grouped"))
    restore_params(net, params)
    net.meta = meta
    return net


def param_count_report(arch: str = "rn") -> dict:
    """Standard-vs-grouped trainable parameter accounting for a canonical model."""
    builder = build_rn if arch == "rn" else build_mcn
    std = builder(variant="standard").count_params()
    grp = builder(variant="grouped").count_params()
    return {
        "arch": arch,
        "standard": std,
        "grouped": grp,
        "delta": std - grp,
        "reduction_pct": 100.0 * (std - grp) / std,
    }
