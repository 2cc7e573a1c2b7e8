// Histogram geometry: 256 intensity bins drawn across a canvas, with one
// draggable threshold marker per scale. The mapping is exact in both
// directions so a marker drag lands on a definite integer threshold.

export const N_BINS = 256;

/** Pixel x of the centre of a bin (= a threshold value's marker position). */
export function binToX(bin: number, width: number): number {
  return ((bin + 0.5) * width) / N_BINS;
}

/** Threshold value for a pointer x; clamped to [0, 255]. */
export function xToBin(x: number, width: number): number {
  const bin = Math.floor((x / width) * N_BINS);
  return Math.min(N_BINS - 1, Math.max(0, bin));
}

/** Bin heights normalised to [0, height]; log scale keeps sparse tails visible. */
export function barHeights(histogram: number[], height: number): number[] {
  const peak = Math.max(1, ...histogram.map((v) => Math.log1p(v)));
  return histogram.map((v) => (Math.log1p(v) / peak) * height);
}

/** Index of the marker whose x is nearest the pointer, within `grab` px. */
export function pickMarker(
  thresholds: number[],
  x: number,
  width: number,
  grab = 8,
): number | null {
  let best: number | null = null;
  let bestDist = grab;
  thresholds.forEach((t, i) => {
    const dist = Math.abs(binToX(t, width) - x);
    if (dist <= bestDist) {
      best = i;
      bestDist = dist;
    }
  });
  return best;
}
