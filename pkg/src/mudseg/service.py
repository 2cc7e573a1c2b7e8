"""Session-based HTTP API for interactive ground-truth tuning.

An analyst uploads one frame per session, iterates on pipeline parameters,
inspects per-scale intermediate stages, and finally exports the mask together
with a replayable params manifest: running ``mudseg segment`` with that
manifest on the same frame reproduces the exported mask byte for byte.

Sessions live in memory with LRU eviction (8 sessions by default, the last
2 revisions each). Every response carries the revision it was computed from
so clients can detect and drop stale data; parameter updates within one
session are serialized, which satisfies the latest-params-wins contract.
"""

from __future__ import annotations

import io
import json
import threading
import uuid
import zipfile
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from fastapi import FastAPI, File, Form, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .overlay import overlay
from .pipeline import (
    PipelineError,
    PipelineParams,
    PipelineResult,
    component_csv_text,
    run_pipeline,
)
from .raster import CLAY, PORE, SILT, GrayImage, ImageMeta, RasterError, decode_gray, png_bytes

MAX_SESSIONS = 8
REVISIONS_RETAINED = 2
PREVIEW_MAX_SIDE = 1024

SCALE_STAGES = ("smoothed", "enhanced", "thresholded")
GLOBAL_STAGES = ("pores", "silt", "overlay")


@dataclass
class Revision:
    params: PipelineParams
    result: PipelineResult


@dataclass
class Session:
    id: str
    image: GrayImage
    meta: ImageMeta
    revisions: "OrderedDict[int, Revision]" = field(default_factory=OrderedDict)
    evicted_revisions: set = field(default_factory=set)
    latest: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    def __init__(self, max_sessions: int = MAX_SESSIONS):
        self.max_sessions = max_sessions
        self._sessions: "OrderedDict[str, Session]" = OrderedDict()
        self._lock = threading.Lock()

    def create(self, image: GrayImage, meta: ImageMeta) -> Session:
        session = Session(id=uuid.uuid4().hex, image=image, meta=meta)
        with self._lock:
            self._sessions[session.id] = session
            while len(self._sessions) > self.max_sessions:
                self._sessions.popitem(last=False)
        return session

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is not None:
                self._sessions.move_to_end(session_id)
            return session

    def delete(self, session_id: str) -> bool:
        with self._lock:
            return self._sessions.pop(session_id, None) is not None


def _error(status: int, reason: str) -> JSONResponse:
    return JSONResponse({"error": reason}, status_code=status)


def _binary_png(mask: np.ndarray) -> np.ndarray:
    return np.where(mask, 255, 0).astype(np.uint8)


def _preview(samples: np.ndarray, full: bool) -> np.ndarray:
    if full:
        return samples
    h, w = samples.shape[:2]
    side = max(h, w)
    if side <= PREVIEW_MAX_SIDE:
        return samples
    step_src = side / PREVIEW_MAX_SIDE
    out_h = max(1, round(h / step_src))
    out_w = max(1, round(w / step_src))
    ys = np.minimum((np.floor((np.arange(out_h) + 0.5) * h / out_h)).astype(np.intp), h - 1)
    xs = np.minimum((np.floor((np.arange(out_w) + 0.5) * w / out_w)).astype(np.intp), w - 1)
    return samples[np.ix_(ys, xs)]


def _stats_payload(result: PipelineResult) -> dict:
    labels = result.mask.labels
    total = labels.size
    fractions = {name: float(np.count_nonzero(labels == code) / total)
                 for code, name in ((CLAY, "clay"), (SILT, "silt"), (PORE, "pore"))}
    counts = {name: len(result.stats[code])
              for code, name in ((CLAY, "clay"), (SILT, "silt"), (PORE, "pore"))}
    silt_ecds = [round(c.ecd_um, 6) for c in result.stats[SILT]]
    return {"class_fractions": fractions, "component_counts": counts, "silt_ecd_um": silt_ecds}


def _stage_urls(session: Session, rev: int, n_scales: int) -> dict:
    base = f"/sessions/{session.id}/stages/{rev}"
    urls: dict = {name: f"{base}/{name}" for name in GLOBAL_STAGES}
    for name in SCALE_STAGES:
        urls[name] = [f"{base}/{name}?scale={k}" for k in range(n_scales)]
    return urls


def create_app(ui_dir: str | None = None, max_sessions: int = MAX_SESSIONS,
               revisions_retained: int = REVISIONS_RETAINED) -> FastAPI:
    app = FastAPI(title="mudseg tuning service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(max_sessions)
    app.state.store = store

    @app.post("/sessions", status_code=201)
    async def create_session(image: UploadFile = File(...), meta: str = Form(...)):
        data = await image.read()
        try:
            samples = decode_gray(data, image.filename or "upload")
        except RasterError as e:
            return _error(400, str(e))
        try:
            raw = json.loads(meta)
            parsed = ImageMeta(
                source_id=str(raw["source_id"]),
                magnification=int(raw["magnification"]),
                hfw_um=float(raw["hfw_um"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, RasterError) as e:
            return _error(400, f"bad metadata: {e}")
        pitch = parsed.hfw_um / samples.shape[1]
        session = store.create(GrayImage(samples, pitch), parsed)
        histogram = np.bincount(samples.ravel(), minlength=256)
        return JSONResponse(
            {
                "session_id": session.id,
                "source_id": parsed.source_id,
                "width": int(samples.shape[1]),
                "height": int(samples.shape[0]),
                "pitch_um": pitch,
                "histogram": [int(v) for v in histogram],
            },
            status_code=201,
        )

    @app.get("/sessions/{session_id}")
    def session_info(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        return {
            "session_id": session.id,
            "source_id": session.meta.source_id,
            "width": session.image.width,
            "height": session.image.height,
            "pitch_um": session.image.pitch_um,
            "latest_revision": session.latest,
        }

    @app.put("/sessions/{session_id}/params")
    def update_params(session_id: str, body: dict):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        try:
            params = PipelineParams.from_dict(body)
        except PipelineError as e:
            return _error(422, str(e))
        with session.lock:
            result = run_pipeline(session.image, session.meta, params)
            session.latest += 1
            rev = session.latest
            session.revisions[rev] = Revision(params, result)
            while len(session.revisions) > revisions_retained:
                old, _ = session.revisions.popitem(last=False)
                session.evicted_revisions.add(old)
        return {
            "revision": rev,
            "stats": _stats_payload(result),
            "overlay_url": f"/sessions/{session.id}/stages/{rev}/overlay",
            "stage_urls": _stage_urls(session, rev, len(params.scales)),
        }

    @app.get("/sessions/{session_id}/stages/{rev}/{stage}")
    def get_stage(session_id: str, rev: int, stage: str, scale: int = 0, full: bool = False):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        with session.lock:
            if rev in session.evicted_revisions:
                return _error(409, f"revision {rev} was superseded and evicted")
            revision = session.revisions.get(rev)
        if revision is None:
            return _error(404, f"unknown revision {rev}")
        result = revision.result
        if stage in SCALE_STAGES:
            if not 0 <= scale < len(result.trace.scales):
                return _error(404, f"no scale {scale} in revision {rev}")
            st = result.trace.scales[scale]
            plane = {
                "smoothed": st.smoothed,
                "enhanced": st.enhanced,
                "thresholded": _binary_png(st.thresholded),
            }[stage]
        elif stage == "pores":
            plane = _binary_png(result.trace.pores)
        elif stage == "silt":
            plane = _binary_png(result.trace.silt)
        elif stage == "overlay":
            plane = overlay(session.image, result.mask)
        elif stage == "mask":
            plane = result.mask.labels
        else:
            return _error(404, f"unknown stage '{stage}'")
        return Response(png_bytes(_preview(plane, full)), media_type="image/png")

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        with session.lock:
            if not session.revisions:
                return _error(409, "nothing to export: no params applied yet")
            rev = session.latest
            revision = session.revisions[rev]
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
            zf.writestr("mask.png", png_bytes(revision.result.mask.labels))
            zf.writestr("params.json", revision.params.to_json())
            zf.writestr("stats.csv", component_csv_text(revision.result.stats))
        filename = f"{session.meta.source_id}_rev{rev}.zip"
        return Response(
            buf.getvalue(),
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="{filename}"'},
        )

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        if not store.delete(session_id):
            return _error(404, "unknown session")
        return Response(status_code=204)

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
