"""Bundled sample images for demos and end-to-end tests."""

from importlib import resources
from pathlib import Path

SAMPLE_NAMES = ("scene_blocks.png", "scene_disk.png", "scene_stripes.png")


def sample_image_paths() -> list[Path]:
    """Filesystem paths of the three bundled 64x64 test images."""
    root = resources.files(__package__)
    return [Path(str(root / name)) for name in SAMPLE_NAMES]
