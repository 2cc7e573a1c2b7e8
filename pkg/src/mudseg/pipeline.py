"""Multi-scale pore segmentation, silt/clay separation and instance labeling.

The workflow runs per spatial scale: median-smooth the raster to the target
feature scale, boost local contrast with a top-hat/bottom-hat combination,
then keep everything at or below a grayscale threshold as pore (the dark
phase). Per-scale pore masks are merged by union so that each scale only ever
adds pores. The grain phase (everything else) is then split into silt and
clay: repeated erosion removes the fine clay web, the surviving cores are
grown back (symmetric dilation, or geodesic reconstruction inside the grain
mask), and any resulting component with an equivalent circular diameter above
the cutoff (2 um by convention) is silt. The remainder of the grain is clay.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .morphology import disk, dilate, erode, enhance_contrast, median_filter
from .raster import CLAY, PORE, SILT, CLASS_NAMES, ClassMask, GrayImage, ImageMeta


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class ScaleParams:
    """One spatial scale: smoothing radius, contrast element radius, threshold."""

    median_radius_px: int
    se_radius_px: int
    threshold: int

    def __post_init__(self):
        if self.median_radius_px < 0 or self.se_radius_px < 0:
            raise PipelineError(f"scale radii must be >= 0: {self}")
        if not 0 <= self.threshold <= 255:
            raise PipelineError(f"threshold must be in [0, 255], got {self.threshold}")


@dataclass(frozen=True)
class PipelineParams:
    """Full parameterisation of the conventional segmentation workflow."""

    scales: tuple
    erosion_count: int
    erosion_se_radius_px: int
    reconstruct: bool
    silt_ecd_min_um: float = 2.0

    def __post_init__(self):
        scales = tuple(self.scales)
        if not scales:
            raise PipelineError("at least one scale is required")
        if any(not isinstance(s, ScaleParams) for s in scales):
            raise PipelineError("scales must be ScaleParams instances")
        object.__setattr__(self, "scales", scales)
        if self.erosion_count < 0:
            raise PipelineError(f"erosion_count must be >= 0, got {self.erosion_count}")
        if self.erosion_se_radius_px < 1:
            raise PipelineError(f"erosion_se_radius_px must be >= 1, got {self.erosion_se_radius_px}")
        if not (self.silt_ecd_min_um > 0):
            raise PipelineError(f"silt_ecd_min_um must be positive, got {self.silt_ecd_min_um}")

    def to_dict(self) -> dict:
        return {
            "scales": [
                {
                    "median_radius_px": s.median_radius_px,
                    "se_radius_px": s.se_radius_px,
                    "threshold": s.threshold,
                }
                for s in self.scales
            ],
            "erosion_count": self.erosion_count,
            "erosion_se_radius_px": self.erosion_se_radius_px,
            "reconstruct": self.reconstruct,
            "silt_ecd_min_um": self.silt_ecd_min_um,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineParams":
        try:
            scales = tuple(
                ScaleParams(
                    median_radius_px=int(s["median_radius_px"]),
                    se_radius_px=int(s["se_radius_px"]),
                    threshold=int(s["threshold"]),
                )
                for s in raw["scales"]
            )
            return cls(
                scales=scales,
                erosion_count=int(raw["erosion_count"]),
                erosion_se_radius_px=int(raw["erosion_se_radius_px"]),
                reconstruct=bool(raw["reconstruct"]),
                silt_ecd_min_um=float(raw.get("silt_ecd_min_um", 2.0)),
            )
        except (KeyError, TypeError) as e:
            raise PipelineError(f"malformed params manifest: {e}") from None

    @classmethod
    def from_json(cls, text: str) -> "PipelineParams":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise PipelineError(f"params manifest is not valid JSON: {e}") from None
        return cls.from_dict(raw)

    @classmethod
    def load(cls, path) -> "PipelineParams":
        return cls.from_json(Path(path).read_text("utf-8"))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), "utf-8")


#: Defaults tuned on the synthetic phantoms; per-image tuning is the intended
#: workflow for real SEM frames.
DEFAULT_PARAMS = PipelineParams(
    scales=(ScaleParams(1, 2, 88), ScaleParams(3, 6, 88)),
    erosion_count=4,
    erosion_se_radius_px=2,
    reconstruct=False,
    silt_ecd_min_um=2.0,
)


@dataclass(frozen=True)
class ComponentStats:
    """Geometry of one labeled instance."""

    id: int
    area_px: int
    ecd_um: float
    centroid: tuple
    bbox: tuple  # (x, y, w, h)


@dataclass
class ScaleTrace:
    smoothed: np.ndarray
    enhanced: np.ndarray
    thresholded: np.ndarray


@dataclass
class StageTrace:
    """Intermediate images retained for interactive inspection."""

    scales: list = field(default_factory=list)
    pores: np.ndarray | None = None
    silt: np.ndarray | None = None


@dataclass
class PipelineResult:
    mask: ClassMask
    stats: dict  # class code -> list of ComponentStats
    trace: StageTrace


def ecd_um(area_px: int, pitch_um: float) -> float:
    """Equivalent circular diameter of an area, in micrometres."""
    return 2.0 * math.sqrt(area_px / math.pi) * pitch_um


def segment_pores(img: GrayImage, params: PipelineParams, trace: StageTrace | None = None) -> np.ndarray:
    """Union of per-scale pore masks (pixels at or below the scale threshold)."""
    samples = img.samples
    pores = np.zeros(samples.shape, dtype=bool)
    for sp in params.scales:
        smoothed = median_filter(samples, disk(sp.median_radius_px))
        enhanced = enhance_contrast(smoothed, disk(sp.se_radius_px))
        mask = enhanced <= sp.threshold
        pores |= mask
        if trace is not None:
            trace.scales.append(ScaleTrace(smoothed, enhanced, mask))
    if trace is not None:
        trace.pores = pores
    return pores


_CONNECTIVITY = {
    4: ndimage.generate_binary_structure(2, 1),
    8: np.ones((3, 3), dtype=bool),
}


def label_instances(mask: ClassMask, class_code: int, connectivity: int = 8) -> np.ndarray:
    """Label connected components of one class, ids 1..K in raster order.

    Ids are assigned by the raster position of each component's first pixel,
    so the labeling is deterministic and independent of the underlying
    component-search order.
    """
    if class_code not in (CLAY, SILT, PORE):
        raise PipelineError(f"class_code must be 0, 1 or 2, got {class_code}")
    if connectivity not in _CONNECTIVITY:
        raise PipelineError(f"connectivity must be 4 or 8, got {connectivity}")
    binary = mask.labels == class_code
    return _label_binary(binary, connectivity)


def _label_binary(binary: np.ndarray, connectivity: int = 8) -> np.ndarray:
    raw, n = ndimage.label(binary, structure=_CONNECTIVITY[connectivity])
    if n == 0:
        return raw.astype(np.int32)
    flat = raw.ravel()
    values, first = np.unique(flat, return_index=True)
    nz = values != 0
    order = np.argsort(first[nz], kind="stable")
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[values[nz][order]] = np.arange(1, n + 1, dtype=np.int32)
    return remap[raw]


def component_stats(labels: np.ndarray, pitch_um: float) -> list[ComponentStats]:
    """Area, ECD, centroid and bbox per labeled instance, sorted by id."""
    if not (pitch_um > 0):
        raise PipelineError(f"pitch_um must be positive, got {pitch_um}")
    n = int(labels.max(initial=0))
    if n == 0:
        return []
    flat = labels.ravel()
    h, w = labels.shape
    ys, xs = np.divmod(np.arange(flat.size), w)
    areas = np.bincount(flat, minlength=n + 1)
    sum_x = np.bincount(flat, weights=xs, minlength=n + 1)
    sum_y = np.bincount(flat, weights=ys, minlength=n + 1)
    boxes = ndimage.find_objects(labels)
    out = []
    for i in range(1, n + 1):
        area = int(areas[i])
        sl = boxes[i - 1]
        out.append(
            ComponentStats(
                id=i,
                area_px=area,
                ecd_um=ecd_um(area, pitch_um),
                centroid=(sum_x[i] / area, sum_y[i] / area),
                bbox=(sl[1].start, sl[0].start, sl[1].stop - sl[1].start, sl[0].stop - sl[0].start),
            )
        )
    return out


def extract_silt(grain: np.ndarray, params: PipelineParams, pitch_um: float) -> tuple[np.ndarray, np.ndarray]:
    """Split the grain mask into (silt, clay).

    Erodes the grain ``erosion_count`` times with the configured disk; the
    surviving cores are grown back either by the symmetric dilation count
    intersected with the grain, or (``reconstruct``) by geodesic
    reconstruction, which returns every grain component that kept a core.
    Components larger than the ECD cutoff are silt.
    """
    if pitch_um is None or not (pitch_um > 0):
        raise PipelineError("silt extraction requires positive pitch metadata")
    se = disk(params.erosion_se_radius_px)
    eroded = grain
    for _ in range(params.erosion_count):
        eroded = erode(eroded, se)
    if params.reconstruct:
        # Geodesic reconstruction spreads along 8-connectivity so each
        # reconstructed region is a full connected component of the grain.
        restored = ndimage.binary_propagation(eroded, structure=_CONNECTIVITY[8], mask=grain)
    else:
        restored = eroded
        for _ in range(params.erosion_count):
            restored = dilate(restored, se)
        restored &= grain

    labels = _label_binary(restored, connectivity=8)
    n = int(labels.max(initial=0))
    silt = np.zeros(grain.shape, dtype=bool)
    if n:
        areas = np.bincount(labels.ravel(), minlength=n + 1)
        keep = 2.0 * np.sqrt(areas / np.pi) * pitch_um > params.silt_ecd_min_um
        keep[0] = False
        silt = keep[labels]
    clay = grain & ~silt
    return silt, clay


def make_class_mask(pore: np.ndarray, silt: np.ndarray) -> ClassMask:
    """Compose the final mask: pore wins, then silt, everything else clay."""
    if pore.shape != silt.shape:
        raise PipelineError(f"pore {pore.shape} and silt {silt.shape} masks disagree")
    if (pore & silt).any():
        raise PipelineError("pore and silt masks overlap; silt must come from the grain phase")
    labels = np.zeros(pore.shape, dtype=np.uint8)
    labels[silt] = SILT
    labels[pore] = PORE
    return ClassMask(labels)


def resolve_pitch(img: GrayImage, meta: ImageMeta | None) -> float | None:
    if img.pitch_um is not None:
        return img.pitch_um
    if meta is not None:
        return meta.hfw_um / img.width
    return None


def run_pipeline(img: GrayImage, meta: ImageMeta | None, params: PipelineParams) -> PipelineResult:
    """Full workflow on one frame; deterministic for fixed inputs."""
    pitch = resolve_pitch(img, meta)
    if pitch is None:
        raise PipelineError("pipeline requires pixel pitch (image pitch or metadata)")
    trace = StageTrace()
    pores = segment_pores(img, params, trace)
    silt, _clay = extract_silt(~pores, params, pitch)
    trace.silt = silt
    mask = make_class_mask(pores, silt)
    stats = {
        code: component_stats(label_instances(mask, code), pitch)
        for code in (CLAY, SILT, PORE)
    }
    return PipelineResult(mask=mask, stats=stats, trace=trace)


def component_csv_text(stats: dict) -> str:
    """Component stats as CSV, one row per instance, grouped by class."""
    lines = ["class,id,area_px,ecd_um,centroid_x,centroid_y,bbox_x,bbox_y,bbox_w,bbox_h"]
    for code in (CLAY, SILT, PORE):
        for c in stats.get(code, []):
            lines.append(
                f"{CLASS_NAMES[code]},{c.id},{c.area_px},{c.ecd_um:.6f},"
                f"{c.centroid[0]:.6f},{c.centroid[1]:.6f},"
                f"{c.bbox[0]},{c.bbox[1]},{c.bbox[2]},{c.bbox[3]}"
            )
    return "\n".join(lines) + "\n"


def write_component_csv(stats: dict, path) -> None:
    Path(path).write_text(component_csv_text(stats), "utf-8")
