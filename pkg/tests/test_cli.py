import json

import numpy as np
import pytest

from mudseg.cli import main
from mudseg.phantom import PhantomSpec, make_phantom
from mudseg.pipeline import PipelineParams, ScaleParams
from mudseg.raster import ImageMeta, save_gray, save_mask, save_meta

FAST_PARAMS = PipelineParams(
    scales=(ScaleParams(1, 2, 88),),
    erosion_count=2,
    erosion_se_radius_px=1,
    reconstruct=False,
)

SPEC = PhantomSpec(width=128, height=128, pitch_um=20 / 128, n_silt=1, n_pores=6,
                   silt_radius_px=(30, 34), pore_radius_px=(4, 9))


def write_frame(dirpath, seed, name):
    img, truth = make_phantom(seed, SPEC)
    dirpath.mkdir(parents=True, exist_ok=True)
    save_gray(img, dirpath / f"{name}.png")
    save_meta(ImageMeta(name, 15000, 20.0), dirpath / f"{name}.meta.json")
    return img, truth


@pytest.fixture
def params_file(tmp_path):
    path = tmp_path / "params.json"
    FAST_PARAMS.save(path)
    return str(path)


def test_segment_empty_dir(tmp_path, capsys):
    (tmp_path / "in").mkdir()
    code = main(["segment", str(tmp_path / "in"), "--out", str(tmp_path / "out")])
    assert code == 0
    assert "warning" in capsys.readouterr().out.lower()


def test_segment_single_image_four_outputs(tmp_path, params_file, capsys):
    write_frame(tmp_path / "in", 21, "f0")
    code = main(["segment", str(tmp_path / "in"), "--params", params_file,
                 "--out", str(tmp_path / "out")])
    assert code == 0
    produced = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert produced == ["f0.mask.png", "f0.overlay.png", "f0.params.json", "f0.stats.csv"]
    assert "segmented in" in capsys.readouterr().out
    # the copied manifest replays to the same params
    assert PipelineParams.load(tmp_path / "out" / "f0.params.json") == FAST_PARAMS


def test_segment_parallel_matches_serial(tmp_path, params_file):
    for i in range(3):
        write_frame(tmp_path / "in", 30 + i, f"f{i}")
    assert main(["segment", str(tmp_path / "in"), "--params", params_file,
                 "--out", str(tmp_path / "serial"), "--jobs", "1"]) == 0
    assert main(["segment", str(tmp_path / "in"), "--params", params_file,
                 "--out", str(tmp_path / "parallel"), "--jobs", "3"]) == 0
    for p in sorted((tmp_path / "serial").iterdir()):
        assert p.read_bytes() == (tmp_path / "parallel" / p.name).read_bytes()


def test_segment_refuses_overwrite_without_force(tmp_path, params_file, capsys):
    write_frame(tmp_path / "in", 5, "f0")
    args = ["segment", str(tmp_path / "in"), "--params", params_file, "--out", str(tmp_path / "out")]
    assert main(args) == 0
    assert main(args) == 1
    assert "--force" in capsys.readouterr().err
    assert main(args + ["--force"]) == 0


def test_segment_missing_sidecar_fails_item(tmp_path, params_file, capsys):
    img, _ = make_phantom(77, SPEC)
    (tmp_path / "in").mkdir()
    save_gray(img, tmp_path / "in" / "lonely.png")  # no sidecar -> no pitch
    code = main(["segment", str(tmp_path / "in"), "--params", params_file,
                 "--out", str(tmp_path / "out")])
    assert code == 1
    assert "FAILED" in capsys.readouterr().err


def make_sources(tmp_path, n=3, w=810, h=700):
    rng = np.random.default_rng(99)
    src = tmp_path / "src"
    (src / "images").mkdir(parents=True)
    (src / "masks").mkdir()
    from mudseg.dataset import TARGET_PITCH_UM
    from mudseg.raster import ClassMask, GrayImage

    for i in range(n):
        img = GrayImage(rng.integers(0, 256, (h, w), dtype=np.uint8))
        mask = ClassMask(rng.integers(0, 3, (h, w), dtype=np.uint8))
        save_gray(img, src / "images" / f"s{i}.png")
        save_mask(mask, src / "masks" / f"s{i}.png")
        save_meta(ImageMeta(f"s{i}", 15000, w * TARGET_PITCH_UM),
                  src / "images" / f"s{i}.meta.json")
    return src


def test_dataset_build_and_rerun_identical(tmp_path, capsys):
    src = make_sources(tmp_path)
    assert main(["dataset", str(src), "--out", str(tmp_path / "d1"), "--seed", "4"]) == 0
    assert main(["dataset", str(src), "--out", str(tmp_path / "d2"), "--seed", "4"]) == 0
    m1 = (tmp_path / "d1" / "manifest.json").read_bytes()
    assert m1 == (tmp_path / "d2" / "manifest.json").read_bytes()
    records = json.loads(m1)["records"]
    assert len(records) == 3 * 4 * 3  # 3 frames, 2x2 tiles, 3 augmentations
    # rerun without --force refuses
    assert main(["dataset", str(src), "--out", str(tmp_path / "d1"), "--seed", "4"]) == 1


def test_dataset_missing_sidecar_is_per_source_error(tmp_path, capsys):
    src = make_sources(tmp_path, n=2)
    (src / "images" / "s1.meta.json").unlink()
    code = main(["dataset", str(src), "--out", str(tmp_path / "out"), "--seed", "1"])
    assert code == 1
    err = capsys.readouterr().err
    assert "s1" in err and "FAILED" in err
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert {r["source_id"] for r in manifest["records"]} == {"s0"}


def test_dataset_config_file(tmp_path):
    src = make_sources(tmp_path, n=1, w=500, h=400)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tile_w": 100, "tile_h": 100, "seed": 2,
                               "target_pitch_um": 20 / 2048}))
    assert main(["dataset", str(src), "--config", str(cfg), "--out", str(tmp_path / "d")]) == 0
    manifest = json.loads((tmp_path / "d" / "manifest.json").read_text())
    assert manifest["tile_w"] == 100 and manifest["seed"] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"tile_width": 100}))
    assert main(["dataset", str(src), "--config", str(bad), "--out", str(tmp_path / "x")]) == 2


def test_rf_train_predict_eval_cycle(tmp_path, capsys):
    imgs = tmp_path / "imgs"
    masks = tmp_path / "masks"
    imgs.mkdir(), masks.mkdir()
    for i, seed in enumerate((11, 12)):
        img, truth = make_phantom(seed, SPEC)
        save_gray(img, imgs / f"p{i}.png")
        save_mask(truth, masks / f"p{i}.png")
    forest_path = tmp_path / "forest.json"
    assert main(["rf-train", "--images", str(imgs), "--masks", str(masks),
                 "--out", str(forest_path), "--trees", "5", "--per-class", "200",
                 "--seed", "3"]) == 0
    assert forest_path.is_file()
    # same seed retrains byte-identically
    assert main(["rf-train", "--images", str(imgs), "--masks", str(masks),
                 "--out", str(tmp_path / "forest2.json"), "--trees", "5",
                 "--per-class", "200", "--seed", "3"]) == 0
    assert forest_path.read_bytes() == (tmp_path / "forest2.json").read_bytes()

    pred = tmp_path / "pred"
    assert main(["rf-predict", "--forest", str(forest_path), "--images", str(imgs),
                 "--out", str(pred)]) == 0
    produced = sorted(p.name for p in pred.iterdir())
    assert produced == ["p0.mask.png", "p1.mask.png"]

    # score the forest against the phantom truth; rename to match stems
    truth_dir = tmp_path / "truth"
    truth_dir.mkdir()
    for i in range(2):
        (truth_dir / f"p{i}.mask.png").write_bytes((masks / f"p{i}.png").read_bytes())
    assert main(["eval", "--pred", str(pred), "--truth", str(truth_dir),
                 "--out", str(tmp_path / "report.json")]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert set(report["aggregate"]) >= {"mean_iou_silt", "mean_iou_pore", "overall_pixel_accuracy"}


def test_eval_identical_masks_all_ones(tmp_path, capsys):
    masks = tmp_path / "m"
    masks.mkdir()
    _, truth = make_phantom(60, SPEC)
    save_mask(truth, masks / "a.png")
    assert main(["eval", "--pred", str(masks), "--truth", str(masks)]) == 0
    out = capsys.readouterr().out
    assert "mean IoU silt: 1.0000" in out and "overall pixel accuracy: 1.0000" in out


def test_eval_fail_under(tmp_path):
    pred = tmp_path / "pred"
    truth = tmp_path / "truth"
    pred.mkdir(), truth.mkdir()
    bad = np.zeros((20, 20), dtype=np.uint8)
    good = np.zeros((20, 20), dtype=np.uint8)
    good[:10] = 1
    bad[:3] = 1  # silt IoU = 60/200 = 0.3
    from mudseg.raster import ClassMask

    save_mask(ClassMask(bad), pred / "x.png")
    save_mask(ClassMask(good), truth / "x.png")
    assert main(["eval", "--pred", str(pred), "--truth", str(truth),
                 "--fail-under", "0.5"]) == 1
    assert main(["eval", "--pred", str(pred), "--truth", str(truth),
                 "--fail-under", "0.2"]) == 0
    assert main(["eval", "--pred", str(pred), "--truth", str(truth),
                 "--fail-under", "0.5", "--fail-classes", "pore"]) == 0


def test_overlay_command(tmp_path):
    img, truth = make_phantom(42, SPEC)
    save_gray(img, tmp_path / "f.png")
    save_mask(truth, tmp_path / "f.mask.png")
    out = tmp_path / "f.overlay.png"
    assert main(["overlay", "--image", str(tmp_path / "f.png"),
                 "--mask", str(tmp_path / "f.mask.png"), "--out", str(out),
                 "--alpha", "0.5"]) == 0
    assert out.is_file()
    # no silent overwrite
    assert main(["overlay", "--image", str(tmp_path / "f.png"),
                 "--mask", str(tmp_path / "f.mask.png"), "--out", str(out)]) == 1


def test_bad_invocation_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["bogus-subcommand"])
    assert exc.value.code == 2
