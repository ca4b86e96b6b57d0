"""Image loading and classifier preprocessing.

The default spec matches the usual ImageNet convention: bilinear resize to
224x224, scale to [0, 1], then per-channel mean/std normalization with
mean (0.485, 0.456, 0.406) and std (0.229, 0.224, 0.225). Backends may
declare a smaller spec; the reference CNN resizes to its own input size.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import kernels
from .errors import CamScoreError
from .tensor import Tensor

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


class PreprocessError(CamScoreError):
    """The image file could not be decoded or has degenerate dimensions."""


@dataclass(frozen=True)
class PreprocessSpec:
    resize_h: int = 224
    resize_w: int = 224
    mean: tuple[float, float, float] = field(default=IMAGENET_MEAN)
    std: tuple[float, float, float] = field(default=IMAGENET_STD)

    def __post_init__(self):
        if self.resize_h < 1 or self.resize_w < 1:
            raise ValueError("resize extents must be positive")
        if any(s <= 0 for s in self.std):
            raise ValueError("std components must be positive")


def load_image(path) -> np.ndarray:
    """Decode an image file to an (H, W, 3) uint8 RGB array."""
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise PreprocessError(f"cannot decode image {path}: {exc}") from exc
    if arr.ndim != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise PreprocessError(f"image {path} has degenerate dimensions {arr.shape[:2]}")
    return arr


def preprocess_array(rgb: np.ndarray, spec: PreprocessSpec) -> Tensor:
    """Resize, scale to [0, 1], and mean/std-normalize an (H, W, 3) uint8 array."""
    chw = np.ascontiguousarray(rgb.astype(np.float64).transpose(2, 0, 1))
    if chw.shape[1:] != (spec.resize_h, spec.resize_w):
        chw = kernels.bilinear_resize(chw, spec.resize_h, spec.resize_w)
    scaled = chw / 255.0
    mean = np.asarray(spec.mean, dtype=np.float64).reshape(3, 1, 1)
    std = np.asarray(spec.std, dtype=np.float64).reshape(3, 1, 1)
    return Tensor((scaled - mean) / std)


def preprocess(path, spec: PreprocessSpec | None = None) -> Tensor:
    """Load an image file and produce the (3, H, W) network input tensor."""
    return preprocess_array(load_image(Path(path)), spec or PreprocessSpec())
