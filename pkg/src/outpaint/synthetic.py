"""Procedural scene-like images for smoke tests and desk-scale runs."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def synthetic_image(rng: np.random.Generator, size: int = 192) -> np.ndarray:
    """Sky/ground gradient with a few soft blobs, as ``size x size x 3`` uint8."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float32) / (size - 1)
    top = rng.uniform(0.3, 1.0, 3)
    bottom = rng.uniform(0.0, 0.7, 3)
    horizon = rng.uniform(0.3, 0.7)
    sharp = rng.uniform(8.0, 30.0)
    t = 1.0 / (1.0 + np.exp(-(yy - horizon) * sharp))
    img = top[None, None, :] * (1 - t[..., None]) + bottom[None, None, :] * t[..., None]
    for _ in range(rng.integers(1, 4)):
        cx, cy = rng.uniform(0, 1, 2)
        r = rng.uniform(0.05, 0.25)
        colour = rng.uniform(0, 1, 3)
        blob = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * r * r))
        img = img * (1 - blob[..., None]) + colour[None, None, :] * blob[..., None]
    return (np.clip(img, 0, 1) * 255).round().astype(np.uint8)


def write_synthetic_dataset(root, count: int, seed: int = 0, size: int = 192) -> list[Path]:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(count):
        path = root / f"scene_{i:05d}.png"
        Image.fromarray(synthetic_image(rng, size), mode="RGB").save(path)
        paths.append(path)
    return paths
