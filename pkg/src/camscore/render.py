"""Heatmap rendering: colormap lookup and alpha-blended overlays.

The colormap is a fixed 5-control-point ramp (blue, cyan, green, yellow,
red at t = 0, 0.25, 0.5, 0.75, 1) with linear interpolation between stops.
Values are quantized with round-half-up, so renders are byte-deterministic
for fixed inputs.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from . import kernels
from .engine import SaliencyMap
from .errors import ShapeMismatchError

COLORMAP_STOPS = (
    (0.00, (0, 0, 255)),
    (0.25, (0, 255, 255)),
    (0.50, (0, 255, 0)),
    (0.75, (255, 255, 0)),
    (1.00, (255, 0, 0)),
)


def colormap(values: np.ndarray) -> np.ndarray:
    """Map an array of values in [0, 1] to (..., 3) uint8 RGB."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    out = np.empty(v.shape + (3,), dtype=np.float64)
    ts = np.array([t for t, _ in COLORMAP_STOPS])
    cs = np.array([c for _, c in COLORMAP_STOPS], dtype=np.float64)
    idx = np.clip(np.searchsorted(ts, v, side="right") - 1, 0, len(ts) - 2)
    t0 = ts[idx]
    span = ts[idx + 1] - t0
    frac = (v - t0) / span
    for ch in range(3):
        out[..., ch] = cs[idx, ch] + frac * (cs[idx + 1, ch] - cs[idx, ch])
    return _quantize(out)


def _quantize(values: np.ndarray) -> np.ndarray:
    """Round half up to uint8."""
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def saliency_to_gray(saliency: SaliencyMap) -> np.ndarray:
    """Normalized saliency as an (H, W) uint8 grayscale image."""
    return _quantize(saliency.normalized_full.data * 255.0)


def render_overlay(original: np.ndarray, saliency: SaliencyMap, alpha: float = 0.5) -> np.ndarray:
    """Blend the colormapped saliency over an (H, W, 3) uint8 image.

    The saliency map is bilinearly resized to the image's dimensions. With
    alpha == 0 the output is pixel-identical to the original.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if original.ndim != 3 or original.shape[2] != 3:
        raise ShapeMismatchError(f"expected an (H, W, 3) image, got {original.shape}")
    h, w = original.shape[:2]
    mask = saliency.normalized_full.data
    if mask.shape != (h, w):
        mask = kernels.bilinear_resize(np.ascontiguousarray(mask[None]), h, w)[0]
    heat = colormap(mask).astype(np.float64)
    blended = (1.0 - alpha) * original.astype(np.float64) + alpha * heat
    return _quantize(blended)


def write_png(path, pixels: np.ndarray) -> None:
    """Write an (H, W) grayscale or (H, W, 3) RGB uint8 array as PNG."""
    mode = "L" if pixels.ndim == 2 else "RGB"
    Image.fromarray(pixels, mode=mode).save(path, format="PNG")
