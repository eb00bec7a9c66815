"""Image loading, band masks and deterministic batching.

Tensors follow the torch layout ``C x H x W`` (optionally with a leading
batch axis).  Masks are ``1 x H x W`` float tensors holding 1 on the band
that must be outpainted and 0 on the preserved centre square.
"""

from __future__ import annotations

import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from .errors import ConfigError, GeometryError, ImageDecodeError, InvalidInputError, ShapeError

FRAME_SIZE = 192
INNER_SIZE = 128
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def load_image(path, target_size: int = FRAME_SIZE) -> torch.Tensor:
    """Decode ``path`` into a ``3 x target x target`` float tensor in [0, 1].

    The shorter side is resized (bilinear) to ``target_size`` and the
    result is centre-cropped.  Grayscale images are replicated to RGB.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            if img.width == 0 or img.height == 0:
                raise InvalidInputError(f"image {path} has a zero dimension")
            img = img.convert("RGB")
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageDecodeError(path, str(exc)) from exc

    w, h = img.size
    if (w, h) != (target_size, target_size):
        scale = target_size / min(w, h)
        nw = max(target_size, round(w * scale))
        nh = max(target_size, round(h * scale))
        img = img.resize((nw, nh), Image.BILINEAR)
        left = (nw - target_size) // 2
        top = (nh - target_size) // 2
        img = img.crop((left, top, left + target_size, top + target_size))

    arr = np.asarray(img, dtype=np.float32) / 255.0
    return torch.from_numpy(arr.transpose(2, 0, 1).copy())


def save_image(x: torch.Tensor, path) -> None:
    """Write a ``3 x H x W`` tensor in [0, 1] as an 8-bit RGB PNG."""
    if x.dim() != 3 or x.shape[0] != 3:
        raise ShapeError(f"expected 3 x H x W image, got {tuple(x.shape)}")
    arr = (x.detach().clamp(0, 1).cpu().numpy() * 255.0).round().astype(np.uint8)
    Image.fromarray(arr.transpose(1, 2, 0), mode="RGB").save(path, format="PNG")


def build_band_mask(outer: int = FRAME_SIZE, inner: int = INNER_SIZE) -> torch.Tensor:
    """Binary ``1 x outer x outer`` mask: 1 on the band, 0 on the centred inner square."""
    if inner < 0 or inner > outer:
        raise GeometryError(f"inner size {inner} must lie in [0, {outer}]")
    if (outer - inner) % 2:
        raise GeometryError(f"band width {outer - inner} is odd; cannot centre {inner} in {outer}")
    mask = torch.ones(1, outer, outer)
    pad = (outer - inner) // 2
    mask[:, pad:pad + inner, pad:pad + inner] = 0.0
    return mask


def _check_mask(x: torch.Tensor, mask: torch.Tensor, channels: int | None = 3) -> None:
    if x.dim() not in (3, 4) or mask.dim() != 3 or mask.shape[0] != 1:
        raise ShapeError(f"incompatible shapes {tuple(x.shape)} and mask {tuple(mask.shape)}")
    if channels is not None and x.shape[-3] != channels:
        raise ShapeError(f"expected {channels} channels, got {x.shape[-3]}")
    if x.shape[-2:] != mask.shape[-2:]:
        raise ShapeError(f"spatial size {tuple(x.shape[-2:])} does not match mask {tuple(mask.shape[-2:])}")


def make_masked_input(gt: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Zero the band of ``gt`` and append the mask as a fourth channel."""
    _check_mask(gt, mask)
    rgb = gt * (1.0 - mask)
    m = mask.expand(*gt.shape[:-3], 1, *mask.shape[-2:])
    return torch.cat([rgb, m], dim=-3)


def local_crop(x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """The local discriminator's operand: ``x`` times the mask, broadcast over channels."""
    _check_mask(x, mask, channels=None)
    return x * mask


def composite_paste(generated: torch.Tensor, gt: torch.Tensor, mask: torch.Tensor,
                    paste: bool) -> torch.Tensor:
    if generated.shape != gt.shape:
        raise ShapeError(f"generated {tuple(generated.shape)} and gt {tuple(gt.shape)} differ")
    _check_mask(generated, mask)
    if not paste:
        return generated
    return torch.where(mask.bool(), generated, gt)


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    paths: tuple[Path, ...]
    split: str = "train"

    def __len__(self) -> int:
        return len(self.paths)

    @classmethod
    def scan(cls, root, split: str = "train") -> "DatasetManifest":
        """Sorted recursive listing of the PNG/JPEG files under ``root``."""
        root = Path(root)
        if not root.is_dir():
            raise ConfigError(f"data directory {root} does not exist")
        found = []
        for dirpath, _, files in os.walk(root):
            for name in files:
                if name.lower().endswith(IMAGE_SUFFIXES):
                    found.append(Path(dirpath) / name)
        found.sort(key=lambda p: p.relative_to(root).as_posix())
        return cls(root=root, paths=tuple(found), split=split)


def epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    """Permutation of ``range(n)`` determined only by ``(seed, epoch)``."""
    return np.random.default_rng([seed, epoch]).permutation(n)


def iterate_batches(manifest: DatasetManifest, batch_size: int, seed: int, epoch: int, *,
                    mask: torch.Tensor | None = None, target_size: int = FRAME_SIZE,
                    shuffle: bool = True, workers: int = 0,
                    ) -> Iterator[tuple[torch.Tensor, torch.Tensor, torch.Tensor]]:
    """Yield ``(masked_input, ground_truth, mask)`` batches covering the manifest once.

    The last partial batch is kept.  ``workers > 0`` decodes images on a
    thread pool; the yielded order does not depend on it.
    """
    if batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    if len(manifest) == 0:
        raise ConfigError(f"manifest for {manifest.root} is empty")
    if mask is None:
        mask = build_band_mask(target_size, INNER_SIZE)

    order = epoch_order(len(manifest), seed, epoch) if shuffle else np.arange(len(manifest))
    chunks: Sequence[list[Path]] = [
        [manifest.paths[i] for i in order[s:s + batch_size]]
        for s in range(0, len(order), batch_size)
    ]

    def load(paths):
        return [load_image(p, target_size) for p in paths]

    if workers > 0:
        # at most 2 * workers batches in flight
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pending: deque = deque()
            for paths in chunks:
                pending.append(pool.submit(load, paths))
                if len(pending) >= 2 * workers:
                    gt = torch.stack(pending.popleft().result())
                    yield make_masked_input(gt, mask), gt, mask
            while pending:
                gt = torch.stack(pending.popleft().result())
                yield make_masked_input(gt, mask), gt, mask
    else:
        for paths in chunks:
            gt = torch.stack(load(paths))
            yield make_masked_input(gt, mask), gt, mask
