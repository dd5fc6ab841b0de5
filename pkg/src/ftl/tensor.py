"""Dense float64 tensors, layer specs, and analytic parameter/FLOP accounting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Tensor extents do not line up for the requested operation."""


class ConfigError(ValueError):
    """A layer spec violates its invariants."""


class Tensor:
    """Dense N-dimensional array of 64-bit reals with explicit shape metadata.

    Storage is a flat row-major float64 buffer. All extents must be >= 1 and
    the flat length always equals the product of the extents.
    """

    __slots__ = ("_array",)

    def __init__(self, data, shape=None):
        arr = np.asarray(data, dtype=np.float64)
        if shape is not None:
            shape = tuple(int(s) for s in shape)
            flat = arr.reshape(-1)
            if math.prod(shape) != flat.size:
                raise ShapeError(
                    f"shape {shape} holds {math.prod(shape)} values, got {flat.size}"
                )
            arr = flat.reshape(shape)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if min(arr.shape) < 1:
            raise ShapeError(f"all extents must be >= 1, got {arr.shape}")
        self._array = np.ascontiguousarray(arr)

    @classmethod
    def zeros(cls, shape) -> "Tensor":
        return cls(np.zeros(tuple(shape), dtype=np.float64))

    @classmethod
    def full(cls, shape, value: float) -> "Tensor":
        return cls(np.full(tuple(shape), float(value), dtype=np.float64))

    @property
    def shape(self) -> tuple[int, ...]:
        return self._array.shape

    @property
    def ndim(self) -> int:
        return self._array.ndim

    @property
    def size(self) -> int:
        return self._array.size

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the underlying buffer."""
        return self._array.reshape(-1)

    @property
    def array(self) -> np.ndarray:
        return self._array

    def copy(self) -> "Tensor":
        return Tensor(self._array.copy())

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


def as_array(x) -> np.ndarray:
    """Coerce a Tensor or array-like to a contiguous float64 ndarray."""
    if isinstance(x, Tensor):
        return x.array
    return np.ascontiguousarray(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class ConvSpec:
    """2-D convolution geometry; groups=1 is a conventional convolution."""

    in_channels: int
    out_channels: int
    kernel_h: int
    kernel_w: int
    stride: int = 1
    padding: int = 0
    groups: int = 1
    bias: bool = True

    def __post_init__(self):
        if min(self.in_channels, self.out_channels, self.kernel_h, self.kernel_w) < 1:
            raise ConfigError(f"conv extents must be >= 1: {self}")
        if self.stride < 1 or self.padding < 0:
            raise ConfigError(f"invalid stride/padding: {self}")
        if self.groups < 1:
            raise ConfigError(f"groups must be >= 1, got {self.groups}")
        if self.in_channels % self.groups or self.out_channels % self.groups:
            raise ConfigError(
                f"channels ({self.in_channels}->{self.out_channels}) not divisible "
                f"by groups={self.groups}"
            )


@dataclass(frozen=True)
class DenseSpec:
    in_features: int
    out_features: int

    def __post_init__(self):
        if min(self.in_features, self.out_features) < 1:
            raise ConfigError(f"dense extents must be >= 1: {self}")


@dataclass(frozen=True)
class LstmSpec:
    input_size: int
    hidden_size: int
    sequence_length: int

    def __post_init__(self):
        if min(self.input_size, self.hidden_size, self.sequence_length) < 1:
            raise ConfigError(f"lstm extents must be >= 1: {self}")


def conv_out_extent(in_extent: int, kernel: int, stride: int, padding: int) -> int:
    """Output extent of a strided cross-correlation with symmetric zero padding."""
    span = in_extent + 2 * padding - kernel
    if span < 0:
        raise ShapeError(
            f"kernel {kernel} does not fit input {in_extent} with padding {padding}"
        )
    return span // stride + 1


def same_padding(kernel: int) -> int:
    """Symmetric padding that preserves spatial extent at stride 1 (odd kernels)."""
    if kernel % 2 == 0:
        raise ConfigError(f"'same' padding needs an odd kernel, got {kernel}")
    return (kernel - 1) // 2


def count_params(spec) -> int:
    """Trainable scalar count for a layer spec."""
    if isinstance(spec, ConvSpec):
        weights = spec.out_channels * (spec.in_channels // spec.groups) \
            * spec.kernel_h * spec.kernel_w
        return weights + (spec.out_channels if spec.bias else 0)
    if isinstance(spec, DenseSpec):
        return spec.in_features * spec.out_features + spec.out_features
    if isinstance(spec, LstmSpec):
        h, f = spec.hidden_size, spec.input_size
        return 4 * (h * (f + h) + h)
    raise ConfigError(f"no parameter formula for {type(spec).__name__}")


def count_flops(spec, out_h: int | None = None, out_w: int | None = None) -> int:
    """FLOPs of one forward application; each multiply-add counts as 2."""
    if isinstance(spec, ConvSpec):
        if out_h is None or out_w is None:
            raise ConfigError("conv FLOPs need the output spatial extents")
        per_output = 2 * (spec.in_channels // spec.groups) * spec.kernel_h * spec.kernel_w
        return per_output * spec.out_channels * out_h * out_w
    if isinstance(spec, DenseSpec):
        return 2 * spec.in_features * spec.out_features
    if isinstance(spec, LstmSpec):
        h, f = spec.hidden_size, spec.input_size
        return spec.sequence_length * 2 * 4 * h * (f + h)
    raise ConfigError(f"no FLOP formula for {type(spec).__name__}")
