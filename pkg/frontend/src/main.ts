// DOM wiring for the tuning workbench: upload panel, parameter editor with
// histogram threshold markers, zoom/pan stage viewer with client-side class
// toggles, stats sidebar and export.

import { ServiceClient } from "./api.js";
import { compositeOverlay } from "./compositing.js";
import { barHeights, binToX, pickMarker, xToBin } from "./histogram.js";
import { DEFAULT_PARAMS, addScale, removeScale, validate } from "./params.js";
import {
  UiState,
  applyEnabled,
  applyParams,
  exportEnabled,
  initialState,
} from "./state.js";
import type { StageName } from "./types.js";
import { PER_SCALE_STAGES } from "./types.js";
import {
  ViewTransform,
  fitImage,
  panBy,
  screenToImage,
  snapped,
  zoomAt,
} from "./viewer.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const MARKER_COLORS = ["#ff9f1c", "#2ec4b6", "#e71d36", "#9b5de5", "#00bbf9"];

const state: UiState = initialState(DEFAULT_PARAMS);
let client = new ServiceClient("");
let originalBitmap: ImageBitmap | null = null;
let originalPixels: ImageData | null = null;
let maskPixels: ImageData | null = null;
let stageBitmap: ImageBitmap | null = null;
let view: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 };
const overlayCanvas = document.createElement("canvas");

function setStatus(text: string, isError = false): void {
  const el = $("status");
  el.textContent = text;
  el.className = isError ? "status error" : "status";
}

// ---------------------------------------------------------------------------
// upload panel
// ---------------------------------------------------------------------------

function uploadError(msg: string | null): void {
  const el = $("upload-error");
  el.textContent = msg ?? "";
  el.style.display = msg ? "block" : "none";
}

async function onUpload(): Promise<void> {
  const fileInput = $<HTMLInputElement>("file");
  const file = fileInput.files?.[0];
  const sourceId = $<HTMLInputElement>("meta-source").value.trim();
  const magnification = Number($<HTMLInputElement>("meta-mag").value);
  const hfwRaw = $<HTMLInputElement>("meta-hfw").value.trim();
  if (!file) return uploadError("choose a PNG or PGM frame first");
  if (!sourceId) return uploadError("source id is required");
  if (!hfwRaw) return uploadError("horizontal field width (um) is required");
  const hfw = Number(hfwRaw);
  if (!(hfw > 0)) return uploadError("horizontal field width must be > 0");
  if (!(magnification > 0)) return uploadError("magnification must be > 0");
  uploadError(null);

  client = new ServiceClient($<HTMLInputElement>("service-url").value.trim());
  try {
    const summary = await client.createSession(file, file.name, {
      source_id: sourceId,
      magnification,
      hfw_um: hfw,
    });
    state.session = summary;
    state.displayedRevision = 0;
    state.lastResponse = null;
    state.stats = null;
    maskPixels = null;
    stageBitmap = null;
    originalBitmap = await createImageBitmap(file);
    originalPixels = bitmapToImageData(originalBitmap);
    const canvas = $<HTMLCanvasElement>("view-stage");
    view = fitImage(summary.width, summary.height, canvas.width, canvas.height);
    setStatus(
      `session ${summary.session_id.slice(0, 8)}: ${summary.width}x${summary.height} px, ` +
        `pitch ${summary.pitch_um.toFixed(5)} um/px`,
    );
    renderAll();
  } catch (e) {
    uploadError(e instanceof Error ? e.message : String(e));
  }
}

function bitmapToImageData(bitmap: ImageBitmap): ImageData {
  const c = document.createElement("canvas");
  c.width = bitmap.width;
  c.height = bitmap.height;
  const ctx = c.getContext("2d")!;
  ctx.drawImage(bitmap, 0, 0);
  return ctx.getImageData(0, 0, bitmap.width, bitmap.height);
}

// ---------------------------------------------------------------------------
// params panel
// ---------------------------------------------------------------------------

function numberInput(value: number, min: number, max: number, onChange: (v: number) => void): HTMLInputElement {
  const input = document.createElement("input");
  input.type = "number";
  input.min = String(min);
  input.max = String(max);
  input.value = String(value);
  input.addEventListener("input", () => {
    onChange(Number(input.value));
    refreshParamsPanel(false);
    renderHistogram();
  });
  return input;
}

function refreshParamsPanel(rebuild = true): void {
  if (rebuild) {
    const rows = $("scale-rows");
    rows.replaceChildren();
    state.form.scales.forEach((scale, i) => {
      const row = document.createElement("div");
      row.className = "scale-row";
      const swatch = document.createElement("span");
      swatch.className = "swatch";
      swatch.style.background = MARKER_COLORS[i % MARKER_COLORS.length];
      row.appendChild(swatch);
      row.appendChild(numberInput(scale.median_radius_px, 0, 50, (v) => (scale.median_radius_px = v)));
      row.appendChild(numberInput(scale.se_radius_px, 0, 50, (v) => (scale.se_radius_px = v)));
      row.appendChild(numberInput(scale.threshold, 0, 255, (v) => (scale.threshold = v)));
      const del = document.createElement("button");
      del.textContent = "×";
      del.title = "remove scale";
      del.disabled = state.form.scales.length <= 1;
      del.addEventListener("click", () => {
        state.form = removeScale(state.form, i);
        refreshParamsPanel();
        renderHistogram();
      });
      row.appendChild(del);
      rows.appendChild(row);
    });
    $<HTMLInputElement>("erosion-count").value = String(state.form.erosion_count);
    $<HTMLInputElement>("erosion-radius").value = String(state.form.erosion_se_radius_px);
    $<HTMLInputElement>("reconstruct").checked = state.form.reconstruct;
    $<HTMLInputElement>("ecd-cutoff").value = String(state.form.silt_ecd_min_um);
    refreshScaleSelector();
  }
  const problems = validate(state.form);
  $("params-problems").textContent = problems.join("; ");
  $<HTMLButtonElement>("apply").disabled = !applyEnabled(state);
  $<HTMLButtonElement>("export").disabled = !exportEnabled(state);
}

function onApply(): void {
  if (!state.session) return;
  const sid = state.session.session_id;
  setStatus("computing…");
  void applyParams(
    state,
    state.form,
    (params) => client.updateParams(sid, params),
    (response) => {
      setStatus(`revision ${response.revision} ready`);
      void refreshStageData();
      renderStats();
      refreshParamsPanel(false);
    },
    (e) => setStatus(e instanceof Error ? e.message : String(e), true),
  );
}

// ---------------------------------------------------------------------------
// histogram with threshold markers
// ---------------------------------------------------------------------------

let dragMarker: number | null = null;

function renderHistogram(): void {
  const canvas = $<HTMLCanvasElement>("histogram");
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!state.session) return;
  const heights = barHeights(state.session.histogram, canvas.height - 4);
  ctx.fillStyle = "#8897a8";
  const barW = canvas.width / heights.length;
  heights.forEach((h, i) => {
    ctx.fillRect(i * barW, canvas.height - h, Math.max(1, barW), h);
  });
  state.form.scales.forEach((scale, i) => {
    const x = binToX(scale.threshold, canvas.width);
    ctx.strokeStyle = MARKER_COLORS[i % MARKER_COLORS.length];
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, canvas.height);
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(String(scale.threshold), Math.min(x + 3, canvas.width - 24), 10);
  });
}

function histogramPointer(canvas: HTMLCanvasElement, ev: PointerEvent): number {
  const rect = canvas.getBoundingClientRect();
  return ((ev.clientX - rect.left) / rect.width) * canvas.width;
}

function wireHistogram(): void {
  const canvas = $<HTMLCanvasElement>("histogram");
  canvas.addEventListener("pointerdown", (ev) => {
    const x = histogramPointer(canvas, ev);
    dragMarker = pickMarker(
      state.form.scales.map((s) => s.threshold),
      x,
      canvas.width,
    );
    if (dragMarker !== null) canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (dragMarker === null) return;
    const x = histogramPointer(canvas, ev);
    state.form.scales[dragMarker].threshold = xToBin(x, canvas.width);
    refreshParamsPanel(); // rebuild keeps the number inputs in sync
    renderHistogram();
  });
  canvas.addEventListener("pointerup", () => (dragMarker = null));
}

// ---------------------------------------------------------------------------
// viewer
// ---------------------------------------------------------------------------

function refreshScaleSelector(): void {
  const select = $<HTMLSelectElement>("stage-scale");
  const wanted = state.form.scales.length;
  if (select.options.length !== wanted) {
    select.replaceChildren(
      ...state.form.scales.map((_, i) => new Option(`scale ${i}`, String(i))),
    );
  }
  select.disabled = !PER_SCALE_STAGES.includes($<HTMLSelectElement>("stage-select").value as StageName);
}

async function refreshStageData(): Promise<void> {
  if (!state.session || !state.lastResponse) return;
  const sid = state.session.session_id;
  const rev = state.lastResponse.revision;
  const stage = $<HTMLSelectElement>("stage-select").value as StageName;
  state.selectedStage = stage;
  try {
    if (stage === "overlay") {
      // client-side compositing needs the raw class mask at full resolution
      const r = await fetch(client.stageUrl(sid, rev, "mask", undefined, true));
      if (!r.ok) throw new Error(`mask stage: HTTP ${r.status}`);
      maskPixels = bitmapToImageData(await createImageBitmap(await r.blob()));
      stageBitmap = null;
    } else {
      const scale = PER_SCALE_STAGES.includes(stage)
        ? Number($<HTMLSelectElement>("stage-scale").value || "0")
        : undefined;
      const r = await fetch(client.stageUrl(sid, rev, stage, scale, true));
      if (!r.ok) throw new Error(`${stage} stage: HTTP ${r.status}`);
      stageBitmap = await createImageBitmap(await r.blob());
    }
    renderViewer();
  } catch (e) {
    setStatus(e instanceof Error ? e.message : String(e), true);
  }
}

function renderComposite(): HTMLCanvasElement | null {
  if (!originalPixels || !maskPixels) return null;
  if (originalPixels.data.length !== maskPixels.data.length) return null;
  const out = new ImageData(originalPixels.width, originalPixels.height);
  compositeOverlay(originalPixels.data, maskPixels.data, out.data, state.alpha, {
    silt: state.showSilt,
    pore: state.showPore,
  });
  overlayCanvas.width = out.width;
  overlayCanvas.height = out.height;
  overlayCanvas.getContext("2d")!.putImageData(out, 0, 0);
  return overlayCanvas;
}

function drawInto(canvas: HTMLCanvasElement, source: CanvasImageSource | null): void {
  const ctx = canvas.getContext("2d")!;
  ctx.imageSmoothingEnabled = false;
  ctx.fillStyle = "#1d232a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!source) return;
  const t = snapped(view);
  ctx.setTransform(t.scale, 0, 0, t.scale, t.offsetX, t.offsetY);
  ctx.drawImage(source, 0, 0);
  ctx.setTransform(1, 0, 0, 1, 0, 0);
}

function renderViewer(): void {
  drawInto($<HTMLCanvasElement>("view-original"), originalBitmap);
  const stageSource =
    state.selectedStage === "overlay" ? renderComposite() : stageBitmap;
  drawInto($<HTMLCanvasElement>("view-stage"), stageSource);
}

function wireViewer(): void {
  const canvases = [$<HTMLCanvasElement>("view-original"), $<HTMLCanvasElement>("view-stage")];
  for (const canvas of canvases) {
    canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const rect = canvas.getBoundingClientRect();
      const sx = ((ev.clientX - rect.left) / rect.width) * canvas.width;
      const sy = ((ev.clientY - rect.top) / rect.height) * canvas.height;
      view = zoomAt(view, sx, sy, ev.deltaY < 0 ? 1.25 : 0.8);
      renderViewer();
    });
    let dragging = false;
    let last: [number, number] = [0, 0];
    canvas.addEventListener("pointerdown", (ev) => {
      dragging = true;
      last = [ev.clientX, ev.clientY];
      canvas.setPointerCapture(ev.pointerId);
    });
    canvas.addEventListener("pointermove", (ev) => {
      if (!dragging) return;
      const rect = canvas.getBoundingClientRect();
      const k = canvas.width / rect.width;
      view = panBy(view, (ev.clientX - last[0]) * k, (ev.clientY - last[1]) * k);
      last = [ev.clientX, ev.clientY];
      renderViewer();
    });
    canvas.addEventListener("pointerup", () => (dragging = false));
    canvas.addEventListener("dblclick", () => {
      if (state.session) {
        view = fitImage(state.session.width, state.session.height, canvas.width, canvas.height);
        renderViewer();
      }
    });
    canvas.addEventListener("mousemove", (ev) => {
      if (!state.session) return;
      const rect = canvas.getBoundingClientRect();
      const sx = ((ev.clientX - rect.left) / rect.width) * canvas.width;
      const sy = ((ev.clientY - rect.top) / rect.height) * canvas.height;
      const [ix, iy] = screenToImage(view, sx, sy);
      $("cursor-pos").textContent =
        ix >= 0 && iy >= 0 && ix < state.session.width && iy < state.session.height
          ? `(${Math.floor(ix)}, ${Math.floor(iy)})`
          : "";
    });
  }
}

// ---------------------------------------------------------------------------
// stats sidebar and export
// ---------------------------------------------------------------------------

function renderStats(): void {
  const el = $("stats");
  if (!state.stats) {
    el.replaceChildren();
    return;
  }
  const { class_fractions: frac, component_counts: counts, silt_ecd_um: ecds } = state.stats;
  const rows = (["clay", "silt", "pore"] as const)
    .map(
      (name) =>
        `<tr><td>${name}</td><td>${(100 * frac[name]).toFixed(1)}%</td>` +
        `<td>${counts[name]}</td></tr>`,
    )
    .join("");
  const ecdRows = ecds
    .map((e, i) => `<tr><td>${i + 1}</td><td>${e.toFixed(3)}</td></tr>`)
    .join("");
  el.innerHTML =
    `<table><thead><tr><th>class</th><th>area</th><th>#</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<h3>silt grains (ECD, um)</h3>` +
    (ecds.length
      ? `<table class="ecd"><tbody>${ecdRows}</tbody></table>`
      : `<p class="dim">none above cutoff</p>`);
}

async function onExport(): Promise<void> {
  if (!state.session || !exportEnabled(state)) return;
  const r = await fetch(client.exportUrl(state.session.session_id));
  if (!r.ok) {
    setStatus(`export failed: HTTP ${r.status}`, true);
    return;
  }
  const blob = await r.blob();
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = `${state.session.source_id}_rev${state.displayedRevision}.zip`;
  a.click();
  URL.revokeObjectURL(a.href);
}

// ---------------------------------------------------------------------------
// boot
// ---------------------------------------------------------------------------

function renderAll(): void {
  refreshParamsPanel();
  renderHistogram();
  renderStats();
  renderViewer();
}

function wire(): void {
  $("upload").addEventListener("click", () => void onUpload());
  $("apply").addEventListener("click", onApply);
  $("export").addEventListener("click", () => void onExport());
  $("add-scale").addEventListener("click", () => {
    state.form = addScale(state.form);
    refreshParamsPanel();
    renderHistogram();
  });
  $<HTMLInputElement>("erosion-count").addEventListener("input", (ev) => {
    state.form.erosion_count = Number((ev.target as HTMLInputElement).value);
    refreshParamsPanel(false);
  });
  $<HTMLInputElement>("erosion-radius").addEventListener("input", (ev) => {
    state.form.erosion_se_radius_px = Number((ev.target as HTMLInputElement).value);
    refreshParamsPanel(false);
  });
  $<HTMLInputElement>("reconstruct").addEventListener("change", (ev) => {
    state.form.reconstruct = (ev.target as HTMLInputElement).checked;
    refreshParamsPanel(false);
  });
  $<HTMLInputElement>("ecd-cutoff").addEventListener("input", (ev) => {
    state.form.silt_ecd_min_um = Number((ev.target as HTMLInputElement).value);
    refreshParamsPanel(false);
  });
  $<HTMLSelectElement>("stage-select").addEventListener("change", () => {
    refreshScaleSelector();
    void refreshStageData();
  });
  $<HTMLSelectElement>("stage-scale").addEventListener("change", () => void refreshStageData());
  for (const id of ["toggle-silt", "toggle-pore"] as const) {
    $<HTMLInputElement>(id).addEventListener("change", (ev) => {
      const on = (ev.target as HTMLInputElement).checked;
      if (id === "toggle-silt") state.showSilt = on;
      else state.showPore = on;
      renderViewer();
    });
  }
  $<HTMLInputElement>("alpha").addEventListener("input", (ev) => {
    state.alpha = Number((ev.target as HTMLInputElement).value);
    $("alpha-value").textContent = state.alpha.toFixed(2);
    renderViewer();
  });
  wireHistogram();
  wireViewer();
  renderAll();
}

if (typeof document !== "undefined" && document.getElementById("apply")) {
  wire();
}
