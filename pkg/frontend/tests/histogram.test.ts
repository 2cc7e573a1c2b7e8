import { describe, expect, it } from "vitest";

import { barHeights, binToX, pickMarker, xToBin } from "../src/histogram.js";

describe("threshold marker mapping", () => {
  it("pointer x maps to the exact bin under it", () => {
    const width = 768; // 3 px per bin
    expect(xToBin(0, width)).toBe(0);
    expect(xToBin(2.9, width)).toBe(0);
    expect(xToBin(3, width)).toBe(1);
    expect(xToBin(width - 1, width)).toBe(255);
  });

  it("clamps drags past either edge", () => {
    expect(xToBin(-50, 512)).toBe(0);
    expect(xToBin(9999, 512)).toBe(255);
  });

  it("binToX and xToBin are mutually consistent for every threshold", () => {
    const width = 640;
    for (let t = 0; t < 256; t++) {
      expect(xToBin(binToX(t, width), width)).toBe(t);
    }
  });

  it("a simulated drag lands on the dragged-to value exactly", () => {
    const width = 768;
    const target = 137;
    const pointerX = binToX(target, width);
    expect(xToBin(pointerX, width)).toBe(137);
  });
});

describe("marker picking", () => {
  it("grabs the nearest marker within range", () => {
    const width = 512;
    const thresholds = [60, 200];
    expect(pickMarker(thresholds, binToX(60, width) + 3, width)).toBe(0);
    expect(pickMarker(thresholds, binToX(200, width) - 3, width)).toBe(1);
    expect(pickMarker(thresholds, binToX(130, width), width)).toBeNull();
  });
});

describe("bar scaling", () => {
  it("peaks at the canvas height and never exceeds it", () => {
    const hist = new Array(256).fill(0);
    hist[100] = 5000;
    hist[10] = 3;
    const heights = barHeights(hist, 90);
    expect(Math.max(...heights)).toBeCloseTo(90);
    expect(heights.every((h) => h >= 0 && h <= 90)).toBe(true);
    expect(heights[10]).toBeGreaterThan(0);
  });
});
