"""Reconstruction and least-squares adversarial objectives.

All norms are reduced by the elementwise mean, so values are comparable
across image and score-map sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .errors import InvalidInputError, ShapeError

ADV_BREAKPOINTS = (10, 30)
ADV_VALUES = (0.001, 0.005, 0.015)


@dataclass(frozen=True)
class LossWeights:
    lambda_rec: float = 1.0
    adv_breakpoints: tuple[int, ...] = ADV_BREAKPOINTS
    adv_values: tuple[float, ...] = ADV_VALUES
    # replaces the schedule entirely when set
    adv_override: float | None = None

    def __post_init__(self):
        if len(self.adv_values) != len(self.adv_breakpoints) + 1:
            raise InvalidInputError("schedule needs one more value than breakpoints")
        if list(self.adv_breakpoints) != sorted(self.adv_breakpoints):
            raise InvalidInputError("schedule breakpoints must be increasing")
        weights = [self.lambda_rec, *self.adv_values]
        if self.adv_override is not None:
            weights.append(self.adv_override)
        if any(w < 0 for w in weights):
            raise InvalidInputError("loss weights must be non-negative")


def rec_loss(x: torch.Tensor, gx: torch.Tensor) -> torch.Tensor:
    """Mean absolute difference over every element, centre and band alike."""
    if x.shape != gx.shape:
        raise ShapeError(f"shape mismatch {tuple(x.shape)} vs {tuple(gx.shape)}")
    return (x - gx).abs().mean()


def mse_loss(x: torch.Tensor, gx: torch.Tensor) -> torch.Tensor:
    if x.shape != gx.shape:
        raise ShapeError(f"shape mismatch {tuple(x.shape)} vs {tuple(gx.shape)}")
    return (x - gx).pow(2).mean()


def adv_loss_gen(scores: torch.Tensor) -> torch.Tensor:
    return (scores - 1).pow(2).mean()


def disc_loss(real_scores: torch.Tensor, fake_scores: torch.Tensor) -> torch.Tensor:
    return (real_scores - 1).pow(2).mean() + fake_scores.pow(2).mean()


def lambda_adv(n: int, weights: LossWeights = LossWeights()) -> float:
    """Adversarial weight for the 1-based epoch ``n``: 0.001, then 0.005 after 10, 0.015 after 30."""
    if n < 1:
        raise InvalidInputError(f"epoch index must be >= 1, got {n}")
    if weights.adv_override is not None:
        return weights.adv_override
    for bp, value in zip(weights.adv_breakpoints, weights.adv_values):
        if n <= bp:
            return value
    return weights.adv_values[-1]


def gen_total(l_rec, l_adv, n: int, weights: LossWeights = LossWeights()):
    if any(float(v.detach() if torch.is_tensor(v) else v) < 0 for v in (l_rec, l_adv)):
        raise InvalidInputError("losses must be non-negative")
    return weights.lambda_rec * l_rec + lambda_adv(n, weights) * l_adv
