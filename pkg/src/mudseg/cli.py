"""Batch command-line entry point.

Subcommands cover every pipeline stage so a full study is scriptable and
reproducible: ``segment`` (ground-truth workflow), ``dataset`` (tile/augment/
split), ``rf-train``/``rf-predict`` (pixel-classifier baseline), ``eval``
(score any prediction masks, including external model output), ``overlay``
(figure-style composites) and ``serve`` (interactive tuning service).

Exit codes: 0 on success, 1 if any item failed, 2 on bad invocation. All
randomness flows from --seed; outputs are only overwritten with --force.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
import time
from pathlib import Path

from . import dataset as ds
from . import forest as rf
from .metrics import MetricsError, evaluate_set, write_report
from .overlay import DEFAULT_ALPHA, overlay, save_overlay
from .pipeline import DEFAULT_PARAMS, PipelineError, PipelineParams, run_pipeline, write_component_csv
from .raster import (
    CLASS_NAMES,
    GrayImage,
    RasterError,
    load_gray,
    load_mask,
    load_meta,
    save_gray,
    save_mask,
    sidecar_path,
)

IMAGE_SUFFIXES = (".png", ".pgm")


def _find_images(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def _check_outputs(paths, force: bool):
    if force:
        return
    clashes = [str(p) for p in paths if Path(p).exists()]
    if clashes:
        raise RasterError(f"output exists (use --force to overwrite): {', '.join(clashes)}")


def _load_params(path: str | None) -> PipelineParams:
    return PipelineParams.load(path) if path else DEFAULT_PARAMS


# ---------------------------------------------------------------------------
# segment
# ---------------------------------------------------------------------------

def _segment_one(path: Path, params: PipelineParams, out: Path, alpha: float, force: bool) -> str:
    stem = path.stem
    targets = [
        out / f"{stem}.mask.png",
        out / f"{stem}.stats.csv",
        out / f"{stem}.overlay.png",
        out / f"{stem}.params.json",
    ]
    _check_outputs(targets, force)
    img = load_gray(path)
    meta = None
    sc = sidecar_path(path)
    if sc.is_file():
        meta = load_meta(sc)
    t0 = time.perf_counter()
    result = run_pipeline(img, meta, params)
    elapsed = time.perf_counter() - t0
    save_mask(result.mask, targets[0])
    write_component_csv(result.stats, targets[1])
    save_overlay(overlay(img, result.mask, alpha), targets[2])
    params.save(targets[3])
    return f"{path.name}: segmented in {elapsed:.3f}s"


def cmd_segment(args) -> int:
    src = Path(args.images)
    if not src.is_dir():
        print(f"error: {src} is not a directory", file=sys.stderr)
        return 2
    params = _load_params(args.params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    images = _find_images(src)
    if not images:
        print(f"warning: no images found in {src}")
        return 0
    failures = 0
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = {
            pool.submit(_segment_one, p, params, out, args.alpha, args.force): p for p in images
        }
        for fut in concurrent.futures.as_completed(futures):
            p = futures[fut]
            try:
                print(fut.result())
            except (RasterError, PipelineError, OSError) as e:
                failures += 1
                print(f"{p.name}: FAILED ({e})", file=sys.stderr)
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------

def cmd_dataset(args) -> int:
    cfg_kwargs = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text("utf-8"))
        allowed = {"target_pitch_um", "tile_w", "tile_h", "seed", "fractions", "split_by_source"}
        unknown = set(raw) - allowed
        if unknown:
            print(f"error: unknown config keys {sorted(unknown)}", file=sys.stderr)
            return 2
        cfg_kwargs.update(raw)
        if "fractions" in cfg_kwargs:
            cfg_kwargs["fractions"] = tuple(cfg_kwargs["fractions"])
    if args.seed is not None:
        cfg_kwargs["seed"] = args.seed
    config = ds.DatasetConfig(**cfg_kwargs)
    out = Path(args.out)
    if not args.force and (out / "manifest.json").exists():
        print(f"error: {out / 'manifest.json'} exists (use --force)", file=sys.stderr)
        return 1

    failures = 0

    def sources():
        nonlocal failures
        src = Path(args.sources)
        images_dir = src / "images"
        masks_dir = src / "masks"
        if not images_dir.is_dir() or not masks_dir.is_dir():
            raise RasterError(f"{src} must contain images/ and masks/ subdirectories")
        for ipath in _find_images(images_dir):
            stem = ipath.stem
            try:
                mpath = next(
                    (masks_dir / f"{stem}{s}" for s in IMAGE_SUFFIXES if (masks_dir / f"{stem}{s}").is_file())
                )
            except StopIteration:
                failures += 1
                print(f"{stem}: FAILED (no matching mask)", file=sys.stderr)
                continue
            try:
                meta = load_meta(sidecar_path(ipath))
                yield load_gray(ipath), load_mask(mpath), meta
            except RasterError as e:
                failures += 1
                print(f"{stem}: FAILED ({e})", file=sys.stderr)

    try:
        manifest = ds.build_dataset(sources(), out, config)
    except (RasterError, ds.DatasetError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for note in manifest.warnings:
        print(f"warning: {note}")
    for err in manifest.source_errors:
        print(f"{err}", file=sys.stderr)
    print(f"wrote {len(manifest.records)} tile records to {out / 'manifest.json'}")
    return 1 if (failures or manifest.source_errors) else 0


# ---------------------------------------------------------------------------
# random forest
# ---------------------------------------------------------------------------

def _paired_masks(images_dir: Path, masks_dir: Path):
    for ipath in _find_images(images_dir):
        stem = ipath.stem
        for suffix in IMAGE_SUFFIXES:
            cand = masks_dir / f"{stem}{suffix}"
            if cand.is_file():
                yield ipath, cand
                break
        else:
            raise RasterError(f"{stem}: no matching mask in {masks_dir}")


def cmd_rf_train(args) -> int:
    out = Path(args.out)
    _check_outputs([out], args.force)
    pairs = []
    for ipath, mpath in _paired_masks(Path(args.images), Path(args.masks)):
        pairs.append((load_gray(ipath), load_mask(mpath), ipath.stem))
        if args.limit and len(pairs) >= args.limit:
            break
    if not pairs:
        print("error: no training images found", file=sys.stderr)
        return 1
    ts = rf.sample_training(pairs, per_class_per_image=args.per_class, seed=args.seed)
    forest = rf.train_forest(ts, n_trees=args.trees, mtry=args.mtry, seed=args.seed)
    rf.save_forest(forest, out)
    print(f"trained {forest.n_trees} trees on {ts.y.size} rows -> {out}")
    return 0


def cmd_rf_predict(args) -> int:
    forest = rf.load_forest(args.forest)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    images = _find_images(Path(args.images))
    if not images:
        print(f"warning: no images found in {args.images}")
        return 0
    failures = 0
    for ipath in images:
        target = out / f"{ipath.stem}.mask.png"
        try:
            _check_outputs([target], args.force)
            t0 = time.perf_counter()
            mask = rf.predict_image(forest, load_gray(ipath))
            save_mask(mask, target)
            print(f"{ipath.name}: predicted in {time.perf_counter() - t0:.3f}s")
        except (RasterError, rf.ForestError) as e:
            failures += 1
            print(f"{ipath.name}: FAILED ({e})", file=sys.stderr)
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# eval / overlay / serve
# ---------------------------------------------------------------------------

def cmd_eval(args) -> int:
    pred_dir = Path(args.pred)
    truth_dir = Path(args.truth)
    pairs = []
    for ppath in _find_images(pred_dir):
        tpath = truth_dir / ppath.name
        if not tpath.is_file():
            print(f"{ppath.name}: FAILED (no matching truth mask)", file=sys.stderr)
            return 1
        pairs.append((load_mask(ppath), load_mask(tpath), ppath.stem))
    try:
        report = evaluate_set(pairs, pooled=args.pooled)
    except MetricsError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if args.out:
        fmt = "csv" if args.out.endswith(".csv") else "json"
        write_report(report, args.out, fmt)
    name_to_code = {n: c for c, n in enumerate(CLASS_NAMES)}
    for name in CLASS_NAMES:
        v = report.mean_iou[name_to_code[name]]
        shown = "undefined" if v is None else f"{v:.4f}"
        print(f"mean IoU {name}: {shown}")
    print(f"overall pixel accuracy: {report.overall_pixel_accuracy:.4f}")
    if args.fail_under is not None:
        checked = [s.strip() for s in args.fail_classes.split(",") if s.strip()]
        bad = set(checked) - set(CLASS_NAMES)
        if bad:
            print(f"error: unknown class names {sorted(bad)}", file=sys.stderr)
            return 2
        for name in checked:
            v = report.mean_iou[name_to_code[name]]
            if v is not None and v < args.fail_under:
                print(f"FAIL: mean IoU {name} {v:.4f} < {args.fail_under}", file=sys.stderr)
                return 1
    return 0


def cmd_overlay(args) -> int:
    img = load_gray(args.image)
    mask = load_mask(args.mask)
    _check_outputs([args.out], args.force)
    save_overlay(overlay(img, mask, args.alpha), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, _, port = args.addr.rpartition(":")
    app = create_app(ui_dir=args.ui)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mudseg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="run the ground-truth workflow on a directory of images")
    p.add_argument("images", help="directory of PNG/PGM frames (+ optional .meta.json sidecars)")
    p.add_argument("--params", help="pipeline params manifest JSON (default: built-in defaults)")
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("dataset", help="build a tiled/augmented/split training corpus")
    p.add_argument("sources", help="directory with images/ and masks/ subdirectories")
    p.add_argument("--config", help="dataset config JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("rf-train", help="train the random-forest pixel classifier")
    p.add_argument("--images", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trees", type=int, default=200)
    p.add_argument("--mtry", type=int, default=2)
    p.add_argument("--per-class", type=int, default=1000)
    p.add_argument("--limit", type=int, help="train on at most this many images")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_rf_train)

    p = sub.add_parser("rf-predict", help="predict class masks with a trained forest")
    p.add_argument("--forest", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_rf_predict)

    p = sub.add_parser("eval", help="score prediction masks against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", help="report path (.json or .csv)")
    p.add_argument("--pooled", action="store_true", help="also report pooled-pixel IoU")
    p.add_argument("--fail-under", type=float)
    p.add_argument("--fail-classes", default="clay,silt,pore")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("overlay", help="render a silt/pore overlay composite")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_overlay)

    p = sub.add_parser("serve", help="start the interactive tuning service")
    p.add_argument("--addr", default="127.0.0.1:8077")
    p.add_argument("--ui", help="directory of static UI assets to serve at /ui")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RasterError, PipelineError, rf.ForestError, ds.DatasetError, MetricsError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
