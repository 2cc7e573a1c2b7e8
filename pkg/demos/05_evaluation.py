"""
Scoring predictors against ground truth
=======================================

The evaluation harness accepts class masks from any source. Here it compares
the conventional workflow and the random forest on the same phantoms and
writes JSON/CSV reports. Per-image IoU above 0.5 counts as a true-positive
detection; classes absent from both masks stay out of the means.
"""

import json
from pathlib import Path

from mudseg import (
    DEFAULT_PARAMS,
    SILT, PORE,
    PhantomSpec, make_phantom,
    sample_training, train_forest, extract_features, predict,
    evaluate_set, write_report,
)
from mudseg.pipeline import run_pipeline

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

spec = PhantomSpec(width=512, height=512, pitch_um=20 / 512)
frames = [(seed, *make_phantom(seed, spec)) for seed in (21, 22, 23)]

forest = train_forest(
    sample_training([(img, truth, f"t{s}") for s, img, truth in frames], 400, seed=1),
    n_trees=15, mtry=2, seed=1,
)

workflow_pairs = []
forest_pairs = []
for seed, img, truth in frames:
    workflow_pairs.append((run_pipeline(img, None, DEFAULT_PARAMS).mask, truth, f"ph{seed}"))
    forest_pairs.append((predict(forest, extract_features(img)), truth, f"ph{seed}"))

for name, pairs in (("workflow", workflow_pairs), ("forest", forest_pairs)):
    report = evaluate_set(pairs, pooled=True)
    write_report(report, out_dir / f"eval_{name}.json", "json")
    write_report(report, out_dir / f"eval_{name}.csv", "csv")
    print(f"{name}: mean silt IoU {report.mean_iou[SILT]:.4f}, "
          f"mean pore IoU {report.mean_iou[PORE]:.4f}, "
          f"pixel accuracy {report.overall_pixel_accuracy:.4f}")
    tp = sum(ev.true_positive[SILT] for ev in report.per_image)
    print(f"  silt true positives (IoU > 0.5): {tp}/{len(report.per_image)} images")

print("reports in", out_dir)
print(json.dumps(json.loads((out_dir / "eval_workflow.json").read_text())["aggregate"],
                 indent=2, sort_keys=True))
