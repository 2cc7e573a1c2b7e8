"""Mudrock SEM segmentation toolkit.

Expert-guided multi-scale segmentation of mudrock SEM frames into silt, clay
and pore classes; dataset construction for model training; a random-forest
pixel-classifier baseline; an IoU evaluation harness for any predictor's
masks; and an interactive tuning service for the human-in-the-loop
ground-truth workflow.
"""

from .raster import (
    CLAY,
    SILT,
    PORE,
    CLASS_NAMES,
    ClassMask,
    GrayImage,
    ImageMeta,
    RasterError,
    load_gray,
    load_mask,
    load_meta,
    rescale,
    rescale_mask,
    save_gray,
    save_mask,
    save_meta,
)
from .morphology import (
    StructuringElement,
    disk,
    median_filter,
    erode,
    dilate,
    opening,
    closing,
    top_hat,
    bottom_hat,
    enhance_contrast,
    gaussian,
    sobel_magnitude,
    hessian_eigen,
)
from .pipeline import (
    DEFAULT_PARAMS,
    ComponentStats,
    PipelineError,
    PipelineParams,
    PipelineResult,
    ScaleParams,
    component_stats,
    ecd_um,
    extract_silt,
    label_instances,
    make_class_mask,
    run_pipeline,
    segment_pores,
)
from .dataset import DatasetConfig, DatasetManifest, TileRecord, augment, build_dataset, split, tile
from .forest import (
    FeatureStack,
    Forest,
    ForestError,
    TrainingSet,
    extract_features,
    feature_names,
    load_forest,
    predict,
    predict_image,
    sample_training,
    save_forest,
    train_forest,
)
from .metrics import (
    EvalReport,
    ImageEval,
    MetricsError,
    class_iou,
    confusion,
    evaluate_pair,
    evaluate_set,
    pixel_accuracy,
    write_report,
)
from .overlay import overlay, save_overlay
from .phantom import PhantomSpec, make_phantom

__version__ = "0.1.0"
