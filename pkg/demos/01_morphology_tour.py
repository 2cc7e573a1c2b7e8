"""
Tour of the filter kernels
==========================

Builds a tiny synthetic scene and walks the filters the segmentation
workflow is made of: median smoothing, the top-hat/bottom-hat contrast
boost, and the derivative features used by the pixel classifier.

Writes a contact sheet to demos/output/morphology_tour.png.
"""

from pathlib import Path

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from mudseg import morphology as m

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

# A mid-gray field with a bright grain, a dark pore and salt-and-pepper noise.
rng = np.random.default_rng(0)
scene = np.full((96, 96), 128, dtype=np.uint8)
yy, xx = np.mgrid[0:96, 0:96]
scene[(xx - 30) ** 2 + (yy - 34) ** 2 <= 18**2] = 204  # grain
scene[(xx - 68) ** 2 + (yy - 64) ** 2 <= 11**2] = 42  # pore
speckle = rng.random(scene.shape)
scene[speckle < 0.02] = 255
scene[speckle > 0.98] = 0

smoothed = m.median_filter(scene, 2)
print("median filter removed", int((scene != smoothed).sum()), "noisy pixels")

enhanced = m.enhance_contrast(smoothed, 4)
print("contrast stretch: smoothed range", smoothed.min(), "-", smoothed.max(),
      "-> enhanced range", enhanced.min(), "-", enhanced.max())

edges = m.sobel_magnitude(smoothed.astype(np.float64))
lmax, lmin = m.hessian_eigen(smoothed, 2.0)

panels = [
    ("raw", scene), ("median r=2", smoothed), ("enhanced", enhanced),
    ("top-hat", m.top_hat(smoothed, 4)), ("bottom-hat", m.bottom_hat(smoothed, 4)),
    ("sobel", edges), ("hessian max", lmax), ("hessian min", lmin),
]
fig, axes = plt.subplots(2, 4, figsize=(12, 6))
for ax, (title, plane) in zip(axes.ravel(), panels):
    ax.imshow(plane, cmap="gray")
    ax.set_title(title)
    ax.axis("off")
fig.tight_layout()
fig.savefig(out_dir / "morphology_tour.png", dpi=110)
print("wrote", out_dir / "morphology_tour.png")
