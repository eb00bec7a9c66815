"""Reconstruction and adversarial metrics over a validation manifest."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import torch

from .data import DatasetManifest, build_band_mask, iterate_batches
from .errors import ConfigError
from .losses import adv_loss_gen
from .training import load_checkpoint

VARIANT_LABELS = {
    "global-only": "Global-only",
    "local": "Local Discriminator",
    "residual": "Residual Encoder",
}


@dataclass(frozen=True)
class LossReport:
    model: str
    l1: float
    mse: float
    adversarial: float
    samples: int
    manifest: str = ""


@torch.no_grad()
def evaluate(generator: Callable[[torch.Tensor], torch.Tensor],
             discriminator: Callable[[torch.Tensor, torch.Tensor], torch.Tensor],
             manifest: DatasetManifest, label: str, *, mask: torch.Tensor | None = None,
             local_mask: torch.Tensor | None = None, batch_size: int = 8) -> LossReport:
    """Per-sample means of L1, MSE and generator-side adversarial loss.

    Samples are visited in manifest order and every metric is computed per
    image before averaging, so the report does not depend on ``batch_size``.
    """
    if len(manifest) == 0:
        raise ConfigError(f"manifest for {manifest.root} is empty")
    if mask is None:
        mask = build_band_mask()
    if local_mask is None:
        local_mask = mask
    l1 = mse = adv = 0.0
    n = 0
    for masked, target, _ in iterate_batches(manifest, batch_size, 0, 1, mask=mask, shuffle=False):
        fake = generator(masked)
        scores = discriminator(fake, local_mask)
        for i in range(target.shape[0]):
            diff = target[i] - fake[i]
            l1 += float(diff.abs().mean())
            mse += float(diff.pow(2).mean())
            adv += float(adv_loss_gen(scores[i]))
            n += 1
    return LossReport(label, l1 / n, mse / n, adv / n, n, str(manifest.root))


def evaluate_model(checkpoint, manifest: DatasetManifest, label: str | None = None,
                   batch_size: int = 8) -> LossReport:
    """Evaluate a saved checkpoint.  Model weights are left untouched."""
    state = load_checkpoint(checkpoint, restore_rng=False)
    state.generator.eval()
    state.discriminator.eval()
    if label is None:
        label = VARIANT_LABELS.get(state.config.variant, state.config.variant)
    return evaluate(state.generator, state.discriminator, manifest, label,
                    mask=state.mask, local_mask=state.local_mask, batch_size=batch_size)


def render_report(reports: Sequence[LossReport]) -> str:
    if not reports:
        raise ValueError("no reports to render")
    rows = [(r.model, f"{r.l1:.4f}", f"{r.mse:.4f}", f"{r.adversarial:.4f}")
            for r in sorted(reports, key=lambda r: r.model)]
    header = ("Model", "L1", "MSE", "Adversarial")
    widths = [max(len(row[i]) for row in [header, *rows]) for i in range(4)]

    def fmt(row):
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        return " | ".join(cells).rstrip()

    rule = "-+-".join("-" * w for w in widths)
    sources = [f"manifest: {m}" for m in dict.fromkeys(r.manifest for r in reports) if m]
    return "\n".join([fmt(header), rule, *map(fmt, rows), *sources]) + "\n"


def write_report(text: str, path) -> None:
    Path(path).write_text(text)
