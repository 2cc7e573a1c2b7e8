"""Grayscale rank and morphological filters plus derivative features.

All neighbourhoods are Euclidean disks: the structuring element of radius r
contains every offset (dx, dy) with dx*dx + dy*dy <= r*r, so radius 0 is the
identity window and radius 1 is the 5-pixel cross. Borders are handled by
clamp-to-edge (replicate) everywhere, which avoids spurious dark rims that a
zero border would push below the pore threshold.

Filters accept and return plain 2-D numpy arrays. uint8 arrays are grayscale
rasters, bool arrays are binary masks (erode = AND over the neighbourhood,
dilate = OR), float arrays are intermediate feature planes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class StructuringElement:
    """Euclidean disk neighbourhood of integer radius."""

    radius_px: int
    offsets: tuple = field(init=False)

    def __post_init__(self):
        if self.radius_px < 0:
            raise ValueError(f"radius must be >= 0, got {self.radius_px}")
        r = self.radius_px
        offs = tuple(
            (dx, dy)
            for dy in range(-r, r + 1)
            for dx in range(-r, r + 1)
            if dx * dx + dy * dy <= r * r
        )
        object.__setattr__(self, "offsets", offs)

    @property
    def footprint(self) -> np.ndarray:
        """Boolean (2r+1, 2r+1) array marking the disk."""
        r = self.radius_px
        fp = np.zeros((2 * r + 1, 2 * r + 1), dtype=bool)
        for dx, dy in self.offsets:
            fp[dy + r, dx + r] = True
        return fp


def disk(radius_px: int) -> StructuringElement:
    return StructuringElement(radius_px)


def _se(se) -> StructuringElement:
    return se if isinstance(se, StructuringElement) else StructuringElement(int(se))


def _apply(img: np.ndarray, se, filt) -> np.ndarray:
    se = _se(se)
    if se.radius_px == 0:
        return img.copy()
    fp = se.footprint
    if img.dtype == np.bool_:
        return filt(img.astype(np.uint8), fp).astype(np.bool_)
    return filt(img, fp)


def median_filter(img: np.ndarray, se) -> np.ndarray:
    """Windowed median; even-count windows take the lower-middle statistic."""
    return _apply(
        img, se,
        lambda a, fp: ndimage.rank_filter(a, (int(fp.sum()) - 1) // 2, footprint=fp, mode="nearest"),
    )


def erode(img: np.ndarray, se) -> np.ndarray:
    """Windowed minimum (AND on binary masks)."""
    return _apply(img, se, lambda a, fp: ndimage.minimum_filter(a, footprint=fp, mode="nearest"))


def dilate(img: np.ndarray, se) -> np.ndarray:
    """Windowed maximum (OR on binary masks)."""
    return _apply(img, se, lambda a, fp: ndimage.maximum_filter(a, footprint=fp, mode="nearest"))


def opening(img: np.ndarray, se) -> np.ndarray:
    return dilate(erode(img, se), se)


def closing(img: np.ndarray, se) -> np.ndarray:
    return erode(dilate(img, se), se)


def top_hat(img: np.ndarray, se) -> np.ndarray:
    """Image minus its opening: bright detail finer than the disk."""
    return img.astype(np.float64) - opening(img, se).astype(np.float64)


def bottom_hat(img: np.ndarray, se) -> np.ndarray:
    """Closing minus the image: dark detail finer than the disk."""
    return closing(img, se).astype(np.float64) - img.astype(np.float64)


def enhance_contrast(img: np.ndarray, se) -> np.ndarray:
    """Local contrast boost: clamp(img + top_hat - bottom_hat).

    Computed in signed arithmetic and clamped once at the end; saturating
    per step would throw away bottom-hat detail on bright images.
    """
    boosted = img.astype(np.int32)
    boosted = boosted + top_hat(img, se).astype(np.int32) - bottom_hat(img, se).astype(np.int32)
    return np.clip(boosted, 0, 255).astype(np.uint8)


def gaussian(img: np.ndarray, sigma_px: float) -> np.ndarray:
    """Separable Gaussian blur, kernel truncated at ceil(3*sigma), normalised."""
    if sigma_px < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma_px}")
    out = img.astype(np.float64)
    if sigma_px == 0:
        return out
    radius = math.ceil(3.0 * sigma_px)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(x * x) / (2.0 * sigma_px * sigma_px))
    kernel /= kernel.sum()
    out = ndimage.correlate1d(out, kernel, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="nearest")
    return out


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)


def sobel_magnitude(img: np.ndarray) -> np.ndarray:
    """Gradient magnitude from the standard 3x3 Sobel kernels."""
    src = img.astype(np.float64)
    gx = ndimage.correlate(src, _SOBEL_X, mode="nearest")
    gy = ndimage.correlate(src, _SOBEL_X.T, mode="nearest")
    return np.hypot(gx, gy)


def _shift_clamped(img: np.ndarray, dy: int, dx: int) -> np.ndarray:
    h, w = img.shape
    ys = np.clip(np.arange(h) + dy, 0, h - 1)
    xs = np.clip(np.arange(w) + dx, 0, w - 1)
    return img[np.ix_(ys, xs)]


def hessian_eigen(img: np.ndarray, sigma_px: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of the smoothed Hessian, (lambda_max, lambda_min) pointwise.

    Second derivatives use central differences on the clamp-to-edge field:
    Hxx = f(x+1) - 2f + f(x-1) and Hxy the four-point cross difference / 4.
    """
    f = gaussian(img, sigma_px)
    hxx = _shift_clamped(f, 0, 1) - 2.0 * f + _shift_clamped(f, 0, -1)
    hyy = _shift_clamped(f, 1, 0) - 2.0 * f + _shift_clamped(f, -1, 0)
    hxy = (
        _shift_clamped(f, 1, 1)
        - _shift_clamped(f, 1, -1)
        - _shift_clamped(f, -1, 1)
        + _shift_clamped(f, -1, -1)
    ) / 4.0
    mean = (hxx + hyy) / 2.0
    spread = np.sqrt(((hxx - hyy) / 2.0) ** 2 + hxy * hxy)
    return mean + spread, mean - spread
