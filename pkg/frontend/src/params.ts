// Form model for pipeline parameters, plus schema validation.
//
// The UI must never send the service anything but a valid manifest, so the
// Apply control stays disabled while validate() reports problems. The
// serialized JSON is exactly the manifest schema the CLI consumes, which
// keeps service exports and command-line replays interchangeable.

import type { PipelineParams, ScaleParams } from "./types.js";

export const DEFAULT_PARAMS: PipelineParams = {
  scales: [
    { median_radius_px: 1, se_radius_px: 2, threshold: 88 },
    { median_radius_px: 3, se_radius_px: 6, threshold: 88 },
  ],
  erosion_count: 4,
  erosion_se_radius_px: 2,
  reconstruct: false,
  silt_ecd_min_um: 2.0,
};

export function cloneParams(p: PipelineParams): PipelineParams {
  return {
    scales: p.scales.map((s) => ({ ...s })),
    erosion_count: p.erosion_count,
    erosion_se_radius_px: p.erosion_se_radius_px,
    reconstruct: p.reconstruct,
    silt_ecd_min_um: p.silt_ecd_min_um,
  };
}

function isInt(v: unknown): v is number {
  return typeof v === "number" && Number.isInteger(v);
}

/** Schema problems, empty when the model serializes to a valid manifest. */
export function validate(p: PipelineParams): string[] {
  const problems: string[] = [];
  if (!Array.isArray(p.scales) || p.scales.length === 0) {
    problems.push("at least one scale is required");
  } else {
    p.scales.forEach((s, i) => {
      if (!isInt(s.median_radius_px) || s.median_radius_px < 0) {
        problems.push(`scale ${i}: median radius must be an integer >= 0`);
      }
      if (!isInt(s.se_radius_px) || s.se_radius_px < 0) {
        problems.push(`scale ${i}: contrast radius must be an integer >= 0`);
      }
      if (!isInt(s.threshold) || s.threshold < 0 || s.threshold > 255) {
        problems.push(`scale ${i}: threshold must be an integer in [0, 255]`);
      }
    });
  }
  if (!isInt(p.erosion_count) || p.erosion_count < 0) {
    problems.push("erosion count must be an integer >= 0");
  }
  if (!isInt(p.erosion_se_radius_px) || p.erosion_se_radius_px < 1) {
    problems.push("erosion radius must be an integer >= 1");
  }
  if (typeof p.reconstruct !== "boolean") {
    problems.push("reconstruct must be a boolean");
  }
  if (!(typeof p.silt_ecd_min_um === "number" && p.silt_ecd_min_um > 0)) {
    problems.push("silt ECD cutoff must be > 0");
  }
  return problems;
}

/** Manifest JSON with a stable key order (sorted, like the service's own). */
export function serializeParams(p: PipelineParams): string {
  const canonical = {
    erosion_count: p.erosion_count,
    erosion_se_radius_px: p.erosion_se_radius_px,
    reconstruct: p.reconstruct,
    scales: p.scales.map((s) => ({
      median_radius_px: s.median_radius_px,
      se_radius_px: s.se_radius_px,
      threshold: s.threshold,
    })),
    silt_ecd_min_um: p.silt_ecd_min_um,
  };
  return JSON.stringify(canonical, null, 2) + "\n";
}

/** Parse a manifest (e.g. from a service export) back into the form model. */
export function parseParams(text: string): PipelineParams {
  const raw = JSON.parse(text) as Record<string, unknown>;
  const scales = (raw.scales as ScaleParams[] | undefined)?.map((s) => ({
    median_radius_px: Number(s.median_radius_px),
    se_radius_px: Number(s.se_radius_px),
    threshold: Number(s.threshold),
  }));
  const parsed: PipelineParams = {
    scales: scales ?? [],
    erosion_count: Number(raw.erosion_count),
    erosion_se_radius_px: Number(raw.erosion_se_radius_px),
    reconstruct: Boolean(raw.reconstruct),
    silt_ecd_min_um: raw.silt_ecd_min_um === undefined ? 2.0 : Number(raw.silt_ecd_min_um),
  };
  const problems = validate(parsed);
  if (problems.length) {
    throw new Error(`invalid params manifest: ${problems.join("; ")}`);
  }
  return parsed;
}

export function addScale(p: PipelineParams): PipelineParams {
  const next = cloneParams(p);
  const last = next.scales[next.scales.length - 1];
  next.scales.push(
    last
      ? { ...last, median_radius_px: last.median_radius_px + 1 }
      : { median_radius_px: 1, se_radius_px: 2, threshold: 88 },
  );
  return next;
}

export function removeScale(p: PipelineParams, index: number): PipelineParams {
  const next = cloneParams(p);
  if (next.scales.length > 1 && index >= 0 && index < next.scales.length) {
    next.scales.splice(index, 1);
  }
  return next;
}
