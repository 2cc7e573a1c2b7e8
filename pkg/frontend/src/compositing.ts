// Client-side overlay compositing from the class-mask stage.
//
// Class toggles re-tint locally instead of re-requesting the server's
// overlay: given the original grayscale pixels and the class-mask pixels
// (class code in the red channel), blend silt toward red and pore toward
// green with round((1-alpha)*gray + alpha*color), clay untouched. This is
// the same arithmetic the service uses for its own overlay stage.

export const CLAY = 0;
export const SILT = 1;
export const PORE = 2;

export interface ClassToggles {
  silt: boolean;
  pore: boolean;
}

const SILT_RGB = [255, 0, 0];
const PORE_RGB = [0, 255, 0];

export function blendChannel(gray: number, color: number, alpha: number): number {
  return Math.round((1 - alpha) * gray + alpha * color);
}

/**
 * Fill `out` (RGBA) from grayscale RGBA pixels and mask RGBA pixels of the
 * same dimensions. Returns `out` for chaining.
 */
export function compositeOverlay(
  gray: Uint8ClampedArray,
  mask: Uint8ClampedArray,
  out: Uint8ClampedArray,
  alpha: number,
  toggles: ClassToggles,
): Uint8ClampedArray {
  if (gray.length !== mask.length || gray.length !== out.length) {
    throw new Error(`pixel buffer sizes differ: ${gray.length}/${mask.length}/${out.length}`);
  }
  for (let i = 0; i < gray.length; i += 4) {
    const g = gray[i];
    const code = mask[i];
    let rgb: number[] | null = null;
    if (code === SILT && toggles.silt) rgb = SILT_RGB;
    else if (code === PORE && toggles.pore) rgb = PORE_RGB;
    if (rgb) {
      out[i] = blendChannel(g, rgb[0], alpha);
      out[i + 1] = blendChannel(g, rgb[1], alpha);
      out[i + 2] = blendChannel(g, rgb[2], alpha);
    } else {
      out[i] = g;
      out[i + 1] = g;
      out[i + 2] = g;
    }
    out[i + 3] = 255;
  }
  return out;
}
