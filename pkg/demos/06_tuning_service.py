"""
Driving the tuning service headlessly
=====================================

The interactive service is plain HTTP, so the whole analyst loop can be
scripted: upload a frame, try thresholds, watch the pore fraction move,
inspect a stage image, export the mask + replayable manifest.

(The browser UI in frontend/ talks to these same endpoints; start a live
server with ``mudseg serve --addr 127.0.0.1:8077``.)
"""

import io
import json
import zipfile
from pathlib import Path

from fastapi.testclient import TestClient

from mudseg import DEFAULT_PARAMS, PhantomSpec, make_phantom
from mudseg.raster import png_bytes
from mudseg.service import create_app

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

client = TestClient(create_app())

spec = PhantomSpec(width=512, height=512, pitch_um=20 / 512)
img, _ = make_phantom(5, spec)
meta = {"source_id": "demo", "magnification": 15000, "hfw_um": 20.0}
r = client.post("/sessions", files={"image": ("demo.png", png_bytes(img.samples))},
                data={"meta": json.dumps(meta)})
session = r.json()
print(f"session {session['session_id'][:8]}…: "
      f"{session['width']}x{session['height']} px, pitch {session['pitch_um']:.5f} um")

# Sweep the first scale's threshold; the pore mask can only grow (union rule).
for threshold in (60, 88, 120):
    params = DEFAULT_PARAMS.to_dict()
    params["scales"][0]["threshold"] = threshold
    resp = client.put(f"/sessions/{session['session_id']}/params", json=params).json()
    frac = resp["stats"]["class_fractions"]
    print(f"threshold {threshold:3d} -> rev {resp['revision']}: "
          f"pore {frac['pore']:.3f}, silt {frac['silt']:.3f}, clay {frac['clay']:.3f}")

stage = client.get(resp["stage_urls"]["thresholded"][0])
(out_dir / "service_stage.png").write_bytes(stage.content)
print("stage image ->", out_dir / "service_stage.png")

export = client.get(f"/sessions/{session['session_id']}/export")
archive = zipfile.ZipFile(io.BytesIO(export.content))
print("export contains:", ", ".join(sorted(archive.namelist())))
(out_dir / "service_export.zip").write_bytes(export.content)
print("replay with:  mudseg segment <dir> --params params.json --out <dir>")
