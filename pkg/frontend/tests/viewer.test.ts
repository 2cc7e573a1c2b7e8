import { describe, expect, it } from "vitest";

import {
  MAX_SCALE,
  MIN_SCALE,
  fitImage,
  imageToScreen,
  panBy,
  screenToImage,
  snapped,
  zoomAt,
} from "../src/viewer.js";

describe("coordinate transforms", () => {
  it("screenToImage inverts imageToScreen", () => {
    const t = { scale: 2.5, offsetX: 40, offsetY: -12 };
    const [sx, sy] = imageToScreen(t, 123, 45);
    const [ix, iy] = screenToImage(t, sx, sy);
    expect(ix).toBeCloseTo(123, 10);
    expect(iy).toBeCloseTo(45, 10);
  });

  it("fitImage centres the frame inside the view", () => {
    const t = fitImage(200, 100, 400, 400);
    expect(t.scale).toBe(2); // limited by width
    expect(imageToScreen(t, 0, 0)).toEqual([0, 100]);
    expect(imageToScreen(t, 200, 100)).toEqual([400, 300]);
  });
});

describe("zooming", () => {
  it("keeps the image point under the cursor fixed", () => {
    let t = fitImage(512, 512, 640, 640);
    const anchorScreen: [number, number] = [300, 220];
    const anchorImage = screenToImage(t, ...anchorScreen);
    for (const factor of [1.25, 1.25, 0.8, 2.0]) {
      t = zoomAt(t, anchorScreen[0], anchorScreen[1], factor);
      const after = screenToImage(t, ...anchorScreen);
      expect(after[0]).toBeCloseTo(anchorImage[0], 8);
      expect(after[1]).toBeCloseTo(anchorImage[1], 8);
    }
  });

  it("clamps the scale range", () => {
    const t = { scale: 1, offsetX: 0, offsetY: 0 };
    expect(zoomAt(t, 0, 0, 1e9).scale).toBe(MAX_SCALE);
    expect(zoomAt(t, 0, 0, 1e-9).scale).toBe(MIN_SCALE);
  });

  it("pixel alignment: integer scales snap offsets to whole pixels", () => {
    const t = snapped({ scale: 4, offsetX: 10.49, offsetY: -3.5 });
    expect(t.offsetX).toBe(10);
    expect(t.offsetY).toBe(-3);
    const u = snapped({ scale: 1.5, offsetX: 10.49, offsetY: -3.5 });
    expect(u.offsetX).toBe(10.49); // fractional scales keep exact panning
  });
});

describe("panning", () => {
  it("is additive and scale-independent", () => {
    const t = panBy(panBy({ scale: 3, offsetX: 5, offsetY: 5 }, 10, 0), -4, 2);
    expect(t).toEqual({ scale: 3, offsetX: 11, offsetY: 7 });
  });
});
