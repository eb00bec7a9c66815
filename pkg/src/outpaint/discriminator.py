"""Global and local patch discriminators and their averaged score."""

from __future__ import annotations

from collections import OrderedDict
from typing import Sequence

import torch
import torch.nn as nn

from .data import local_crop
from .errors import ShapeError
from .generator import seeded_init_

DEFAULT_WIDTHS = (32, 64, 128, 256, 256)
LEAKY_SLOPE = 0.2
LEAKY_GAIN = (2.0 / (1.0 + LEAKY_SLOPE ** 2)) ** 0.5
# Small enough that normalised channels have unit variance to ~1e-5 even
# when the pre-norm variance is around 0.1.
NORM_EPS = 1e-6


class DiscriminatorTower(nn.Sequential):
    """Four stride-2 and one stride-1 conv/instance-norm/leaky-relu stages, then a 3x3 head.

    Returns raw scores: a ``192 x 192`` frame becomes a ``1 x 12 x 12`` map.
    """

    def __init__(self, widths: Sequence[int] = DEFAULT_WIDTHS, in_channels: int = 3):
        if len(widths) != 5:
            raise ValueError("tower needs five stage widths")
        layers = []
        prev = in_channels
        for i, (width, stride) in enumerate(zip(widths, (2, 2, 2, 2, 1)), start=1):
            layers += [
                (f"conv{i}", nn.Conv2d(prev, width, 3, stride=stride, padding=1)),
                (f"norm{i}", nn.InstanceNorm2d(width, eps=NORM_EPS, affine=False)),
                (f"act{i}", nn.LeakyReLU(LEAKY_SLOPE)),
            ]
            prev = width
        layers.append(("head", nn.Conv2d(prev, 1, 3, stride=1, padding=1)))
        super().__init__(OrderedDict(layers))
        self.in_channels = in_channels

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() not in (3, 4) or x.shape[-3:] != (self.in_channels, 192, 192):
            raise ShapeError(f"discriminator expects {self.in_channels} x 192 x 192 input, "
                             f"got {tuple(x.shape)}")
        if x.dim() == 3:
            return super().forward(x.unsqueeze(0)).squeeze(0)
        return super().forward(x)


class Discriminator(nn.Module):
    """Global tower, plus a local tower scoring ``mask * x`` when ``dual``.

    With both towers the score is the elementwise mean
    ``(local(mask * x) + global(x)) / 2``.  Without the local tower only the
    global score is returned and the mask is ignored.
    """

    def __init__(self, dual: bool = True, widths: Sequence[int] = DEFAULT_WIDTHS):
        super().__init__()
        self.dual = dual
        self.global_tower = DiscriminatorTower(widths)
        self.local_tower = DiscriminatorTower(widths) if dual else None

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        return combined_score(x, mask, self)


def discriminator_forward(x: torch.Tensor, tower: str, weights: Discriminator) -> torch.Tensor:
    if tower == "global":
        return weights.global_tower(x)
    if tower == "local":
        if weights.local_tower is None:
            raise ValueError("discriminator was built without a local tower")
        return weights.local_tower(x)
    raise ValueError(f"unknown tower {tower!r}")


def combined_score(x: torch.Tensor, mask: torch.Tensor, weights: Discriminator) -> torch.Tensor:
    global_score = weights.global_tower(x)
    if weights.local_tower is None:
        return global_score
    return (weights.local_tower(local_crop(x, mask)) + global_score) / 2


def init_discriminator(seed: int, dual: bool = True,
                       widths: Sequence[int] = DEFAULT_WIDTHS) -> Discriminator:
    d = Discriminator(dual=dual, widths=widths)
    gains = {"global_tower.head": 1.0, "local_tower.head": 1.0}
    return seeded_init_(d, seed, gains, default_gain=LEAKY_GAIN)
