"""Encoder/decoder generator with residual blocks in the encoder.

The layer stack, in order (output sizes for a 4 x 192 x 192 input)::

    conv5x5        16 x 192 x 192
    block s2      128 x  96 x  96
    block s2      256 x  48 x  48
    block s1 x3   256 x  48 x  48
    (conv3x3, relu) x3      256 x 48 x 48
    deconv4x4 s2, relu      128 x 96 x 96
    conv3x3, relu           128 x 96 x 96
    deconv4x4 s2, relu       64 x 192 x 192
    conv3x3, relu            32 x 192 x 192
    conv3x3, sigmoid          3 x 192 x 192

No normalisation layers are used anywhere.  The ``residual=False`` variant
keeps the same stack but drops the shortcut from every block.
"""

from __future__ import annotations

import math
from collections import OrderedDict

import torch
import torch.nn as nn

from .errors import NumericError, ShapeError

INPUT_CHANNELS = 4


class ResidualBlock(nn.Module):
    """conv3x3(stride) -> relu -> conv3x3 -> relu, added to a shortcut of the input.

    The shortcut is the identity when shapes agree, otherwise a strided 1x1
    projection.  With ``residual=False`` the block is the plain branch.
    """

    def __init__(self, in_channels: int, out_channels: int, stride: int = 1, residual: bool = True):
        super().__init__()
        if stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {stride}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride
        self.residual = residual
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, stride=stride, padding=1)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, stride=1, padding=1)
        self.act = nn.ReLU()
        self.shortcut: nn.Module | None = None
        if residual and (stride != 1 or in_channels != out_channels):
            self.shortcut = nn.Conv2d(in_channels, out_channels, 1, stride=stride)

    def branch(self, x: torch.Tensor) -> torch.Tensor:
        return self.act(self.conv2(self.act(self.conv1(x))))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-3] != self.in_channels:
            raise ShapeError(f"block expects {self.in_channels} channels, got {x.shape[-3]}")
        out = self.branch(x)
        if not self.residual:
            return out
        skip = x if self.shortcut is None else self.shortcut(x)
        return skip + out


def _layers(residual: bool) -> list[tuple[str, nn.Module]]:
    return [
        ("conv_in", nn.Conv2d(INPUT_CHANNELS, 16, 5, stride=1, padding=2)),
        ("block1", ResidualBlock(16, 128, 2, residual)),
        ("block2", ResidualBlock(128, 256, 2, residual)),
        ("block3", ResidualBlock(256, 256, 1, residual)),
        ("block4", ResidualBlock(256, 256, 1, residual)),
        ("block5", ResidualBlock(256, 256, 1, residual)),
        ("conv_mid1", nn.Conv2d(256, 256, 3, padding=1)),
        ("relu_mid1", nn.ReLU()),
        ("conv_mid2", nn.Conv2d(256, 256, 3, padding=1)),
        ("relu_mid2", nn.ReLU()),
        ("conv_mid3", nn.Conv2d(256, 256, 3, padding=1)),
        ("relu_mid3", nn.ReLU()),
        ("deconv1", nn.ConvTranspose2d(256, 128, 4, stride=2, padding=1)),
        ("relu_up1", nn.ReLU()),
        ("conv_up1", nn.Conv2d(128, 128, 3, padding=1)),
        ("relu_up2", nn.ReLU()),
        ("deconv2", nn.ConvTranspose2d(128, 64, 4, stride=2, padding=1)),
        ("relu_up3", nn.ReLU()),
        ("conv_up2", nn.Conv2d(64, 32, 3, padding=1)),
        ("relu_up4", nn.ReLU()),
        ("conv_out", nn.Conv2d(32, 3, 3, padding=1)),
        ("sigmoid", nn.Sigmoid()),
    ]


class Generator(nn.Sequential):
    """Maps a ``4 x 192 x 192`` masked input (RGB + mask) to a ``3 x 192 x 192`` frame."""

    def __init__(self, residual: bool = True, check_finite: bool = True):
        super().__init__(OrderedDict(_layers(residual)))
        self.residual = residual
        self.check_finite = check_finite

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() not in (3, 4) or x.shape[-3:] != (INPUT_CHANNELS, 192, 192):
            raise ShapeError(f"generator expects 4 x 192 x 192 input, got {tuple(x.shape)}")
        unbatched = x.dim() == 3
        if unbatched:
            x = x.unsqueeze(0)
        for name, layer in self.named_children():
            x = layer(x)
            if self.check_finite and not torch.isfinite(x).all():
                raise NumericError(f"non-finite activation after generator layer '{name}'")
        return x.squeeze(0) if unbatched else x


def fan_in(layer: nn.Module) -> int:
    """Inputs feeding one output unit.

    For a stride-s transposed convolution each output pixel sees
    ``k*k / s*s`` kernel taps per input channel.
    """
    w = layer.weight
    if isinstance(layer, nn.ConvTranspose2d):
        s = layer.stride[0] * layer.stride[1]
        return w.shape[0] * w.shape[2] * w.shape[3] // s
    return w.shape[1] * w.shape[2] * w.shape[3]


def init_bound(layer: nn.Module, gain: float = math.sqrt(2.0)) -> float:
    """Half-width of the uniform init: ``gain * sqrt(3 / fan_in)``."""
    return gain * math.sqrt(3.0 / fan_in(layer))


RELU_GAIN = math.sqrt(2.0)
# residual branches start damped so the summed stack stays near unit scale
BRANCH_DAMPING = 0.25


@torch.no_grad()
def seeded_init_(module: nn.Module, seed: int, gains: dict[str, float] | None = None,
                 default_gain: float = RELU_GAIN) -> nn.Module:
    """Fan-in scaled uniform weights, zero biases, drawn from a private RNG.

    Layers are visited in registration order, so the result depends only on
    ``seed`` and the architecture.  ``gains`` maps qualified layer names to
    a non-default gain.
    """
    gains = gains or {}
    rng = torch.Generator().manual_seed(seed)
    for name, layer in module.named_modules():
        if not isinstance(layer, (nn.Conv2d, nn.ConvTranspose2d)):
            continue
        bound = init_bound(layer, gains.get(name, default_gain))
        layer.weight.copy_((torch.rand(layer.weight.shape, generator=rng) * 2 - 1) * bound)
        if layer.bias is not None:
            layer.bias.zero_()
    return module


def init_generator(seed: int, residual: bool = True) -> Generator:
    g = Generator(residual=residual)
    gains = {"conv_out": 1.0}
    for name, block in g.named_children():
        if isinstance(block, ResidualBlock) and block.residual:
            gains[f"{name}.conv2"] = RELU_GAIN * BRANCH_DAMPING
            gains[f"{name}.shortcut"] = 1.0
    return seeded_init_(g, seed, gains)


def generator_forward(masked_input: torch.Tensor, generator: Generator) -> torch.Tensor:
    return generator(masked_input)
