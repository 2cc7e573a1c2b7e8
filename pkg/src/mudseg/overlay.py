"""Overlay rendering: silt red, pore green, clay left as the raw grayscale."""

from __future__ import annotations

import numpy as np

from PIL import Image

from .raster import PORE, SILT, ClassMask, GrayImage, RasterError

SILT_COLOR = (255, 0, 0)
PORE_COLOR = (0, 255, 0)
DEFAULT_ALPHA = 0.5


def overlay(img: GrayImage, mask: ClassMask, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Blend class colors over the grayscale: (h, w, 4) uint8 RGBA.

    Each silt/pore channel is round((1-alpha)*gray + alpha*color); clay
    pixels stay pure grayscale and the alpha channel is always opaque, so
    the composite itself is the exportable figure.
    """
    if img.samples.shape != mask.labels.shape:
        raise RasterError(
            f"dimension mismatch: image {img.samples.shape} vs mask {mask.labels.shape}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise RasterError(f"alpha must be in [0, 1], got {alpha}")
    g = img.samples.astype(np.float64)
    rgba = np.empty(img.samples.shape + (4,), dtype=np.uint8)
    rgba[..., 0] = img.samples
    rgba[..., 1] = img.samples
    rgba[..., 2] = img.samples
    rgba[..., 3] = 255
    for code, color in ((SILT, SILT_COLOR), (PORE, PORE_COLOR)):
        sel = mask.labels == code
        if not sel.any():
            continue
        for ch in range(3):
            blended = np.floor((1.0 - alpha) * g[sel] + alpha * color[ch] + 0.5)
            rgba[..., ch][sel] = blended.astype(np.uint8)
    return rgba


def save_overlay(rgba: np.ndarray, path) -> None:
    Image.fromarray(rgba, mode="RGBA").save(path, format="PNG")
