"""Acceptance gate: one test per criterion, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines and the
recorded (informational) timings.
"""

import functools
import io
import json
import math
import os
import time
import zipfile

import numpy as np
import pytest

from mudseg import dataset as D
from mudseg import forest as F
from mudseg import metrics as M
from mudseg import morphology as m
from mudseg import pipeline as P
from mudseg.cli import main
from mudseg.phantom import PhantomSpec, make_phantom
from mudseg.raster import (
    CLAY,
    PORE,
    SILT,
    ClassMask,
    GrayImage,
    ImageMeta,
    load_mask,
    png_bytes,
    save_gray,
    save_meta,
)

import oracles


def criterion(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException as e:
                skipped = type(e).__name__ in ("Skipped", "SkipTest")
                print(f"ACCEPTANCE {name}: {'SKIPPED' if skipped else 'FAIL'}")
                raise
            print(f"ACCEPTANCE {name}: PASS")
            return result

        return wrapper

    return deco


def iou_of(pred, truth, code):
    p = pred == code
    t = truth == code
    union = (p | t).sum()
    return (p & t).sum() / union if union else float("nan")


@criterion("filter-oracle-suite")
def test_filter_oracle_suite():
    rng = np.random.default_rng(1234)
    t0 = time.perf_counter()
    checks = 0
    for _ in range(200):
        img = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        for r in (1, 2, 3):
            pairs = [
                (m.median_filter(img, r), oracles.median_oracle(img, r)),
                (m.erode(img, r), oracles.erode_oracle(img, r)),
                (m.dilate(img, r), oracles.dilate_oracle(img, r)),
                (m.opening(img, r), oracles.open_oracle(img, r)),
                (m.closing(img, r), oracles.close_oracle(img, r)),
                (m.top_hat(img, r), oracles.top_hat_oracle(img, r)),
                (m.bottom_hat(img, r), oracles.bottom_hat_oracle(img, r)),
                (m.enhance_contrast(img, r), oracles.enhance_oracle(img, r)),
            ]
            for got, expect in pairs:
                assert np.array_equal(got, expect), "filter/oracle mismatch"
                checks += 1
    elapsed = time.perf_counter() - t0
    print(f"  [{checks} exact filter comparisons in {elapsed:.1f}s]")
    assert elapsed < 60.0


@criterion("morphology-algebra")
def test_morphology_algebra():
    rng = np.random.default_rng(99)
    for _ in range(100):
        x = rng.integers(0, 256, (16, 16), dtype=np.uint8)
        y = np.maximum(x, rng.integers(0, 256, (16, 16), dtype=np.uint8))
        r = int(rng.integers(1, 4))
        o, c = m.opening(x, r), m.closing(x, r)
        assert np.array_equal(m.opening(o, r), o)
        assert np.array_equal(m.closing(c, r), c)
        assert np.array_equal(m.erode(x, r), 255 - m.dilate(255 - x, r))
        assert (m.erode(x, r) <= x).all() and (x <= m.dilate(x, r)).all()
        assert (o <= x).all() and (x <= c).all()
        for f in (m.erode, m.dilate, m.opening, m.closing, m.median_filter):
            assert (f(x, r) <= f(y, r)).all()


@criterion("metric-fixtures")
def test_metric_fixtures():
    # hand-counted 8x8: 48 of 64 correct -> accuracy 0.75
    truth = np.zeros((8, 8), dtype=np.uint8)
    pred = truth.copy()
    pred.ravel()[:16] = SILT
    cm = M.confusion(ClassMask(pred), ClassMask(truth))
    assert M.pixel_accuracy(cm) == 0.75

    # overlap 2 of union 6 -> IoU 1/3 exactly
    a = np.zeros((8, 8), dtype=np.uint8)
    b = np.zeros((8, 8), dtype=np.uint8)
    a[0, 0:4] = PORE
    b[0, 2:6] = PORE
    assert math.isclose(
        M.class_iou(M.confusion(ClassMask(a), ClassMask(b)), PORE), 1 / 3, rel_tol=1e-12
    )

    # IoU symmetry and J <= Dice on 1000 random pairs
    rng = np.random.default_rng(5)
    for _ in range(1000):
        x = ClassMask(rng.integers(0, 3, (12, 12), dtype=np.uint8))
        y = ClassMask(rng.integers(0, 3, (12, 12), dtype=np.uint8))
        cm_xy = M.confusion(x, y)
        cm_yx = M.confusion(y, x)
        for c in range(3):
            assert M.class_iou(cm_xy, c) == M.class_iou(cm_yx, c)
            tp = cm_xy[c, c]
            denom = cm_xy[c, :].sum() + cm_xy[:, c].sum()
            if denom:
                assert M.class_iou(cm_xy, c) <= 2 * tp / denom + 1e-12

    # Table-2-style fixture: masks built to silt 0.892 / pore 0.729
    total = 4000
    t = np.zeros(total, dtype=np.uint8)
    p = np.zeros(total, dtype=np.uint8)
    t[:1000] = SILT
    p[108:1000] = SILT
    t[1000:2000] = PORE
    p[1271:2000] = PORE
    report = M.evaluate_set(
        [(ClassMask(p.reshape(40, -1)), ClassMask(t.reshape(40, -1)), "6-1")]
    )
    assert round(report.per_image[0].iou[SILT], 3) == 0.892
    assert round(report.per_image[0].iou[PORE], 3) == 0.729


@criterion("phantom-end-to-end")
def test_phantom_end_to_end():
    img, truth = make_phantom(7)
    tl = truth.labels
    assert len(np.unique(P._label_binary(tl == SILT)[tl == SILT])) >= 5
    assert len(np.unique(P._label_binary(tl == PORE)[tl == PORE])) >= 20
    for c in P.component_stats(P.label_instances(truth, SILT), img.pitch_um):
        assert c.ecd_um > 2.0
    t0 = time.perf_counter()
    result = P.run_pipeline(img, None, P.DEFAULT_PARAMS)
    elapsed = time.perf_counter() - t0
    scores = {code: iou_of(result.mask.labels, tl, code) for code in (CLAY, SILT, PORE)}
    print(f"  [phantom IoU clay {scores[CLAY]:.4f} silt {scores[SILT]:.4f} "
          f"pore {scores[PORE]:.4f} in {elapsed:.2f}s]")
    assert all(v >= 0.90 for v in scores.values()), scores
    assert elapsed < 10.0


@criterion("forest-classifier")
def test_forest_classifier(tmp_path):
    t_start = time.perf_counter()
    # separable single-feature dataset -> training accuracy 1.0
    names = F.feature_names()
    rng = np.random.default_rng(0)
    x = np.zeros((300, len(names)))
    y = np.array([i % 3 for i in range(300)], dtype=np.uint8)
    x[:, 0] = 10.0 * y + rng.normal(0, 0.3, 300)
    ts = F.TrainingSet(x, y, [("fix", i) for i in range(300)], names)
    forest = F.train_forest(ts, n_trees=5, mtry=len(names), seed=1)
    stack = F.FeatureStack(x.T.reshape(len(names), 1, 300), names)
    assert (F.predict(forest, stack).labels.ravel() == y).mean() == 1.0

    # phantom experiment: train on 5 frames, evaluate a held-out phantom
    train_pairs = [
        (*make_phantom(seed), f"ph{seed}") for seed in (101, 102, 103, 104, 105)
    ]
    ts2 = F.sample_training(train_pairs, per_class_per_image=600, seed=11)
    forest2 = F.train_forest(ts2, n_trees=25, mtry=2, seed=11)
    held_img, held_truth = make_phantom(900)
    pred = F.predict(forest2, F.extract_features(held_img))
    silt_iou = iou_of(pred.labels, held_truth.labels, SILT)
    pore_iou = iou_of(pred.labels, held_truth.labels, PORE)
    print(f"  [held-out phantom RF IoU silt {silt_iou:.4f} pore {pore_iou:.4f}]")
    assert silt_iou >= 0.85 and pore_iou >= 0.85

    # same-seed retraining serializes byte-identically
    F.save_forest(forest2, tmp_path / "a.json")
    F.save_forest(F.train_forest(ts2, n_trees=25, mtry=2, seed=11), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    elapsed = time.perf_counter() - t_start
    print(f"  [forest criterion in {elapsed:.1f}s]")
    assert elapsed < 300.0


@criterion("dataset-builder")
def test_dataset_builder(tmp_path):
    rng = np.random.default_rng(3)
    # the 2048x1767 frame tiles into exactly 5x5 = 25 tiles of 400x343
    img = GrayImage(rng.integers(0, 256, (1767, 2048), dtype=np.uint8), 20 / 2048)
    mask = ClassMask(rng.integers(0, 3, (1767, 2048), dtype=np.uint8))
    tiles = D.tile(img, mask)
    assert len(tiles) == 25
    assert all(t[0].samples.shape == (343, 400) for t in tiles)

    # 595 groups x 3 augmentations = 1785 items, no split leakage
    records = []
    for g in range(595):
        for aug in D.AUGMENTATIONS:
            records.append(D.TileRecord(f"t{g}_{aug}", f"s{g % 7}", g // 7, g % 7,
                                        aug, None, "", ""))
    D.split(records, seed=42)
    assert len(records) == 1785
    by_group = {}
    for r in records:
        by_group.setdefault(r.group_key(), set()).add(r.split)
    assert all(len(s) == 1 for s in by_group.values())

    # same-seed rebuild is byte-identical
    samples = rng.integers(0, 256, (700, 810), dtype=np.uint8)
    labels = rng.integers(0, 3, (700, 810), dtype=np.uint8)
    for sub in ("one", "two"):
        D.build_dataset(
            [(GrayImage(samples.copy()), ClassMask(labels.copy()),
              ImageMeta("f", 15000, 810 * D.TARGET_PITCH_UM))],
            tmp_path / sub,
            D.DatasetConfig(seed=5),
        )
    assert (tmp_path / "one" / "manifest.json").read_bytes() == (
        tmp_path / "two" / "manifest.json"
    ).read_bytes()


@criterion("ecd-arithmetic")
def test_ecd_arithmetic():
    assert math.isclose(P.ecd_um(1257, 0.05), 2.0003, rel_tol=1e-3)
    assert P.ecd_um(1256, 0.05) < 2.0 < P.ecd_um(1257, 0.05)
    for area, expect_silt in ((1256, False), (1257, True)):
        grain = np.zeros((4, 400), dtype=bool)
        grain.ravel()[:area] = True
        silt, _ = P.extract_silt(
            grain,
            P.PipelineParams((P.ScaleParams(0, 0, 0),), 0, 1, False, 2.0),
            pitch_um=0.05,
        )
        assert silt.any() == expect_silt


@criterion("replay-identity")
def test_replay_identity(tmp_path):
    from fastapi.testclient import TestClient

    from mudseg.service import create_app

    spec = PhantomSpec(width=256, height=256, pitch_um=20 / 256)
    img, _ = make_phantom(31, spec)
    client = TestClient(create_app())
    meta = json.dumps({"source_id": "replay", "magnification": 15000, "hfw_um": 20.0})
    r = client.post("/sessions", files={"image": ("r.png", png_bytes(img.samples))},
                    data={"meta": meta})
    sid = r.json()["session_id"]
    tuned = P.PipelineParams(
        (P.ScaleParams(1, 2, 84), P.ScaleParams(2, 4, 90)), 3, 2, False, 2.0
    )
    client.put(f"/sessions/{sid}/params", json=tuned.to_dict())
    export = zipfile.ZipFile(io.BytesIO(client.get(f"/sessions/{sid}/export").content))

    src = tmp_path / "in"
    src.mkdir()
    save_gray(img, src / "replay.png")
    save_meta(ImageMeta("replay", 15000, 20.0), src / "replay.meta.json")
    (tmp_path / "params.json").write_bytes(export.read("params.json"))
    code = main(["segment", str(src), "--params", str(tmp_path / "params.json"),
                 "--out", str(tmp_path / "out")])
    assert code == 0
    cli_mask = (tmp_path / "out" / "replay.mask.png").read_bytes()
    assert cli_mask == export.read("mask.png")


@criterion("performance-informational")
def test_performance_informational(tmp_path):
    spec = PhantomSpec(width=2048, height=1767, pitch_um=20 / 2048)
    img, _ = make_phantom(88, spec)
    src = tmp_path / "in"
    src.mkdir()
    save_gray(img, src / "big.png")
    save_meta(ImageMeta("big", 15000, 20.0), src / "big.meta.json")
    three_scale = P.PipelineParams(
        (P.ScaleParams(1, 2, 88), P.ScaleParams(2, 4, 88), P.ScaleParams(3, 6, 88)),
        4, 2, False, 2.0,
    )
    three_scale.save(tmp_path / "p.json")
    t0 = time.perf_counter()
    code = main(["segment", str(src), "--params", str(tmp_path / "p.json"),
                 "--out", str(tmp_path / "out")])
    elapsed = time.perf_counter() - t0
    assert code == 0
    # Recorded, not gating: the reference conventional workflow is reported
    # in the several-seconds range on a frame this size.
    print(f"  [segment 2048x1767, 3 scales: {elapsed:.2f}s -- informational]")


@criterion("optional-corpus-check")
def test_optional_corpus_check(tmp_path):
    corpus = os.environ.get("MUDSEG_CORPUS_DIR")
    if not corpus:
        pytest.skip("MUDSEG_CORPUS_DIR not set; corpus check excluded from default suite")
    masks = sorted(
        p for p in (os.scandir(corpus)) if p.name.endswith(".png") and "mask" in p.name
    )
    assert masks, f"no mask files under {corpus}"
    pairs = [(load_mask(p.path), load_mask(p.path), p.name) for p in masks]
    report = M.evaluate_set(pairs)
    assert report.overall_pixel_accuracy == 1.0
    assert all(v in (None, 1.0) for v in report.mean_iou.values())
    for p in masks:
        mask = load_mask(p.path)
        pitch = 20.0 / mask.width
        for c in P.component_stats(P.label_instances(mask, SILT), pitch):
            assert c.ecd_um > 0
