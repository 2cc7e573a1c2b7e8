"""Synthetic mudrock phantoms with known ground truth.

A phantom mimics the structure the segmentation workflow is built for: a
mid-gray textured clay matrix riddled with small dark pores, a handful of
larger dark pores, and several big bright silt grains. Because the truth
mask is constructed alongside the intensity image, phantoms serve as an
independent oracle for end-to-end pipeline and classifier checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import PORE, SILT, ClassMask, GrayImage


@dataclass(frozen=True)
class PhantomSpec:
    width: int = 1024
    height: int = 1024
    pitch_um: float = 20.0 / 1024.0
    n_silt: int = 6
    silt_radius_px: tuple = (64, 92)
    n_pores: int = 24
    pore_radius_px: tuple = (6, 28)
    micro_pore_spacing_px: int = 15
    micro_pore_radius_px: tuple = (4, 6)
    clay_level: float = 126.0
    silt_level: tuple = (190.0, 215.0)
    pore_level: tuple = (28.0, 52.0)
    texture_amplitude: float = 6.0
    noise_sigma: float = 10.0


def _disk_mask(h: int, w: int, cx: float, cy: float, r: float) -> np.ndarray:
    y0 = max(0, int(cy - r) - 1)
    y1 = min(h, int(cy + r) + 2)
    x0 = max(0, int(cx - r) - 1)
    x1 = min(w, int(cx + r) + 2)
    ys, xs = np.mgrid[y0:y1, x0:x1]
    patch = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
    full = np.zeros((h, w), dtype=bool)
    full[y0:y1, x0:x1] = patch
    return full


def make_phantom(seed: int, spec: PhantomSpec = PhantomSpec()) -> tuple[GrayImage, ClassMask]:
    """Draw one phantom; identical (image, truth) for a given seed."""
    rng = np.random.default_rng(seed)
    h, w = spec.height, spec.width
    truth = np.zeros((h, w), dtype=np.uint8)

    # Textured clay base.
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    canvas = (
        spec.clay_level
        + spec.texture_amplitude * np.sin(xx / 23.7 + rng.uniform(0, 2 * np.pi))
        + spec.texture_amplitude * np.cos(yy / 31.3 + rng.uniform(0, 2 * np.pi))
    )

    # Big bright silt grains, mutually disjoint with a margin.
    silt_disks = []
    attempts = 0
    while len(silt_disks) < spec.n_silt and attempts < 10_000:
        attempts += 1
        r = rng.uniform(*spec.silt_radius_px)
        cx = rng.uniform(r + 4, w - r - 4)
        cy = rng.uniform(r + 4, h - r - 4)
        if all(np.hypot(cx - ox, cy - oy) > r + orr + 18 for ox, oy, orr in silt_disks):
            silt_disks.append((cx, cy, r))
            m = _disk_mask(h, w, cx, cy, r)
            canvas[m] = rng.uniform(*spec.silt_level)
            truth[m] = SILT

    def far_from_silt(cx, cy, margin):
        return all(np.hypot(cx - ox, cy - oy) > orr + margin for ox, oy, orr in silt_disks)

    # Pore rims along each grain boundary: detached clay platelets leave the
    # silt mostly bordered by voids, which is also what lets the erosion
    # stage peel the grain free of the clay web.
    for ox, oy, orr in silt_disks:
        arc = 2 * np.pi * orr
        for k in range(int(arc / 9)):
            theta = 2 * np.pi * k / int(arc / 9) + rng.uniform(-0.02, 0.02)
            rad = orr + rng.uniform(-1.5, 1.5)
            cx = ox + rad * np.cos(theta)
            cy = oy + rad * np.sin(theta)
            r = rng.uniform(4.0, 6.5)
            m = _disk_mask(h, w, cx, cy, r)
            canvas[m] = rng.uniform(*spec.pore_level)
            truth[m] = PORE

    # Larger pores of mixed sizes, centred in the clay.
    placed = 0
    attempts = 0
    while placed < spec.n_pores and attempts < 20_000:
        attempts += 1
        r = rng.uniform(*spec.pore_radius_px)
        cx = rng.uniform(2, w - 2)
        cy = rng.uniform(2, h - 2)
        if not far_from_silt(cx, cy, 2):
            continue
        m = _disk_mask(h, w, cx, cy, r)
        canvas[m] = rng.uniform(*spec.pore_level)
        truth[m] = PORE
        placed += 1

    # Dense jittered lattice of micro-pores throughout the clay. The clay
    # webbing this leaves between pores is what the erosion stage removes.
    s = spec.micro_pore_spacing_px
    for gy in np.arange(2.0, h, s):
        for gx in np.arange(2.0, w, s):
            cx = gx + rng.uniform(-3, 3)
            cy = gy + rng.uniform(-3, 3)
            if not far_from_silt(cx, cy, 1):
                continue
            r = rng.uniform(*spec.micro_pore_radius_px)
            m = _disk_mask(h, w, cx, cy, r)
            canvas[m] = rng.uniform(*spec.pore_level)
            truth[m] = PORE

    canvas += rng.normal(0.0, spec.noise_sigma, size=canvas.shape)
    samples = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
    return GrayImage(samples, spec.pitch_um), ClassMask(truth)
