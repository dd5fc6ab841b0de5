"""Machine-local throughput benchmarks; ratios are meaningful, absolutes are not."""
from __future__ import annotations

import time

import numpy as np

from .layers import Conv2d
from .losses import additive_l2_batch, cross_entropy_batch
from .metrics import BenchReport
from .models import build_mcn, build_rn
from .tensor import ConvSpec


def bench_model(arch: str = "mcn", variant: str = "grouped", batch: int = 8,
                passes: int = 10, seed: int = 0) -> BenchReport:
    """Average images/sec over timed forward+backward passes on synthetic data."""
    rng = np.random.default_rng(seed)
    if arch == "mcn":
        net = build_mcn(seed=seed, variant=variant)
        shape = (batch,) + net.config.input_shape
        labels = rng.integers(0, 2, size=batch)
        images_per_pass = batch
    elif arch == "rn":
        net = build_rn(seed=seed, variant=variant)
        cfg = net.config
        shape = (batch, cfg.sequence_length) + cfg.input_shape
        targets = rng.uniform(size=(batch, 2))
        images_per_pass = batch * cfg.sequence_length
    else:
        raise ValueError(f"unknown arch {arch!r}")
    x = rng.uniform(size=shape)

    def one_pass():
        out, tape = net.forward(x)
        if arch == "mcn":
            _, dout = cross_entropy_batch(out, labels)
            net.backward(tape, dout, from_logits=True)
        else:
            _, dout = additive_l2_batch(out, targets)
            net.backward(tape, dout)

    one_pass()  # warm up caches and BLAS threads
    t0 = time.perf_counter()
    for _ in range(passes):
        one_pass()
    elapsed = time.perf_counter() - t0
    return BenchReport(
        model=arch, variant=variant, batch_size=batch, passes=passes,
        images_per_sec=images_per_pass * passes / elapsed,
        seconds_per_pass=elapsed / passes,
    )


def bench_grouped_layer(channels: int = 256, spatial=(24, 32), batch: int = 8,
                        groups: int = 4, trials: int = 12, seed: int = 0) -> dict:
    """Median forward+backward wall time of the grouped 256-channel conv
    against its standard-conv replacement, on identical inputs."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(batch, channels) + tuple(spatial))
    results = {}
    for name, g in (("standard", 1), ("grouped", groups)):
        spec = ConvSpec(channels, channels, 3, 3, padding=1, groups=g, bias=False)
        layer = Conv2d(spec, np.random.default_rng(seed))
        dy = rng.uniform(size=(batch, channels) + tuple(spatial))
        times = []
        layer.backward(layer.forward(x)[1], dy)  # warm up
        for _ in range(trials):
            t0 = time.perf_counter()
            _, cache = layer.forward(x)
            layer.backward(cache, dy)
            times.append(time.perf_counter() - t0)
        results[name] = float(np.median(times))
    results["speedup"] = results["standard"] / results["grouped"]
    results["channels"] = channels
    results["groups"] = groups
    results["trials"] = trials
    return results
