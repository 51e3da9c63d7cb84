"""Seeded forward-only building blocks: conv stacks, affine norms, MLPs.

There is no training anywhere in this package, so batch norm is replaced
by a per-channel affine (scale 1, bias 0 by default) and every weight is
drawn once from a named Philox stream. Biases default to zero so that a
zero input propagates to a zero output through any default-configured
stack.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor_ops as T
from .rng import stream

__all__ = [
    "ChannelAffine",
    "ConvBlock2D",
    "ConvBlock3D",
    "ResidualStack2D",
    "ResidualStack3D",
    "MergeBlock2D",
    "MergeBlock3D",
    "Mlp",
    "rms_norm_channels",
]


def _init_kernel(rng: np.random.Generator, shape) -> np.ndarray:
    fan_in = int(np.prod(shape[1:]))
    return rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=shape)


@dataclass
class ChannelAffine:
    """Per-channel y = scale * x + bias, the stand-in for batch norm."""

    scale: np.ndarray
    bias: np.ndarray

    @staticmethod
    def identity(channels: int) -> "ChannelAffine":
        return ChannelAffine(np.ones(channels), np.zeros(channels))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        extra = (1,) * (x.ndim - 1)
        return x * self.scale.reshape(-1, *extra) + self.bias.reshape(-1, *extra)


@dataclass
class ConvBlock2D:
    """Conv -> per-channel affine -> optional ReLU on (C, H, W) maps."""

    kernel: np.ndarray  # (C_out, C_in, k, k)
    affine: ChannelAffine
    relu: bool = True

    @staticmethod
    def seeded(seed: int, tag: str, c_in: int, c_out: int, k: int = 3, relu: bool = True) -> "ConvBlock2D":
        kern = _init_kernel(stream(seed, "conv2d", tag), (c_out, c_in, k, k))
        return ConvBlock2D(kern, ChannelAffine.identity(c_out), relu)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        pad = self.kernel.shape[-1] // 2
        y = self.affine(T.conv2d(x, self.kernel, padding=pad))
        return T.relu(y) if self.relu else y


@dataclass
class ConvBlock3D:
    """Conv -> per-channel affine -> optional ReLU on (C, H, W, Z) volumes."""

    kernel: np.ndarray  # (C_out, C_in, k, k, k)
    affine: ChannelAffine
    relu: bool = True

    @staticmethod
    def seeded(seed: int, tag: str, c_in: int, c_out: int, k: int = 3, relu: bool = True) -> "ConvBlock3D":
        kern = _init_kernel(stream(seed, "conv3d", tag), (c_out, c_in, k, k, k))
        return ConvBlock3D(kern, ChannelAffine.identity(c_out), relu)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        pad = self.kernel.shape[-1] // 2
        y = self.affine(T.conv3d(x, self.kernel, padding=pad))
        return T.relu(y) if self.relu else y


@dataclass
class ResidualStack2D:
    """y = x + block2(block1(x)); zero kernels make it the identity."""

    block1: ConvBlock2D
    block2: ConvBlock2D

    @staticmethod
    def seeded(seed: int, tag: str, channels: int, k: int = 3) -> "ResidualStack2D":
        return ResidualStack2D(
            ConvBlock2D.seeded(seed, tag + ".a", channels, channels, k),
            ConvBlock2D.seeded(seed, tag + ".b", channels, channels, k),
        )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return x + self.block2(self.block1(x))


@dataclass
class ResidualStack3D:
    """y = x + block(x) with a single 3x3x3 conv block."""

    block: ConvBlock3D

    @staticmethod
    def seeded(seed: int, tag: str, channels: int, k: int = 3) -> "ResidualStack3D":
        return ResidualStack3D(ConvBlock3D.seeded(seed, tag, channels, channels, k))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return x + self.block(x)


@dataclass
class MergeBlock2D:
    """Reduce concatenated history (k*C, H, W) back to C channels.

    y = skip(x) + conv2(relu(conv1(x))) where skip is a 1x1 projection;
    setting the conv kernels to zero and skip to a slice of the identity
    makes the block a pure channel projection.
    """

    skip: np.ndarray  # (C_out, C_in, 1, 1)
    conv1: ConvBlock2D
    conv2: ConvBlock2D

    @staticmethod
    def seeded(seed: int, tag: str, c_in: int, c_out: int, k: int = 3) -> "MergeBlock2D":
        skip = _init_kernel(stream(seed, "merge2d", tag), (c_out, c_in, 1, 1))
        return MergeBlock2D(
            skip,
            ConvBlock2D.seeded(seed, tag + ".m1", c_in, c_out, k),
            ConvBlock2D.seeded(seed, tag + ".m2", c_out, c_out, k, relu=False),
        )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return T.conv2d(x, self.skip) + self.conv2(self.conv1(x))


@dataclass
class MergeBlock3D:
    """3D analogue of MergeBlock2D for (k*C, H, W, Z) volumes."""

    skip: np.ndarray  # (C_out, C_in, 1, 1, 1)
    conv1: ConvBlock3D
    conv2: ConvBlock3D

    @staticmethod
    def seeded(seed: int, tag: str, c_in: int, c_out: int, k: int = 3) -> "MergeBlock3D":
        skip = _init_kernel(stream(seed, "merge3d", tag), (c_out, c_in, 1, 1, 1))
        return MergeBlock3D(
            skip,
            ConvBlock3D.seeded(seed, tag + ".m1", c_in, c_out, k),
            ConvBlock3D.seeded(seed, tag + ".m2", c_out, c_out, k, relu=False),
        )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return T.conv3d(x, self.skip) + self.conv2(self.conv1(x))


@dataclass
class Mlp:
    """Two-layer perceptron, ReLU in between; biases start at zero."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @staticmethod
    def seeded(seed: int, tag: str, d_in: int, d_hidden: int, d_out: int) -> "Mlp":
        rng = stream(seed, "mlp", tag)
        return Mlp(
            _init_kernel(rng, (d_hidden, d_in)), np.zeros(d_hidden),
            _init_kernel(rng, (d_out, d_hidden)), np.zeros(d_out),
        )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """x is (..., d_in); returns (..., d_out)."""
        h = T.relu(x @ self.w1.T + self.b1)
        return h @ self.w2.T + self.b2


def rms_norm_channels(x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Scale-only RMS normalization over the channel (first) axis."""
    rms = np.sqrt(np.mean(np.square(x), axis=0, keepdims=True) + eps)
    return x / rms
