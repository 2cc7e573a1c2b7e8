// Zoom/pan transform math for the stage canvas.
//
// The view maps image pixel (ix, iy) to screen (ix * scale + offsetX,
// iy * scale + offsetY). Zooming anchors the pointer position: the image
// point under the cursor stays put. Rendering snaps the offset to whole
// device pixels at integer scales so pixels stay aligned instead of
// smearing across texel boundaries.

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export const MIN_SCALE = 0.05;
export const MAX_SCALE = 64;

export function imageToScreen(t: ViewTransform, ix: number, iy: number): [number, number] {
  return [ix * t.scale + t.offsetX, iy * t.scale + t.offsetY];
}

export function screenToImage(t: ViewTransform, sx: number, sy: number): [number, number] {
  return [(sx - t.offsetX) / t.scale, (sy - t.offsetY) / t.scale];
}

/** Initial fit: image centred, entirely visible. */
export function fitImage(
  imgW: number,
  imgH: number,
  viewW: number,
  viewH: number,
): ViewTransform {
  const scale = Math.min(viewW / imgW, viewH / imgH);
  return {
    scale,
    offsetX: (viewW - imgW * scale) / 2,
    offsetY: (viewH - imgH * scale) / 2,
  };
}

/** Zoom by `factor` keeping the image point under (sx, sy) fixed. */
export function zoomAt(
  t: ViewTransform,
  sx: number,
  sy: number,
  factor: number,
): ViewTransform {
  const scale = Math.min(MAX_SCALE, Math.max(MIN_SCALE, t.scale * factor));
  const applied = scale / t.scale;
  return {
    scale,
    offsetX: sx - (sx - t.offsetX) * applied,
    offsetY: sy - (sy - t.offsetY) * applied,
  };
}

export function panBy(t: ViewTransform, dx: number, dy: number): ViewTransform {
  return { ...t, offsetX: t.offsetX + dx, offsetY: t.offsetY + dy };
}

/** Offsets rounded to device pixels at integer scales (pixel alignment). */
export function snapped(t: ViewTransform): ViewTransform {
  if (Number.isInteger(t.scale)) {
    return { ...t, offsetX: Math.round(t.offsetX), offsetY: Math.round(t.offsetY) };
  }
  return t;
}
