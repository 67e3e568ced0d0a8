import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { dragToRect, perimeterBand } from "../src/geometry.js";

const fixtures = JSON.parse(
  readFileSync(new URL("../fixtures/overlay_fixtures.json", import.meta.url), "utf8"),
) as {
  image_res: number;
  line_width: number;
  cases: { drag: number[]; rect: number[]; band_pixels: number[] }[];
};

describe("dragToRect", () => {
  it("normalizes an inverted drag", () => {
    expect(dragToRect(10, 10, 4, 4)).toEqual([4, 4, 10, 10]);
  });

  it("clamps out-of-image drags to bounds", () => {
    expect(dragToRect(-5, 20, 30, -8)).toEqual([0, 0, 30, 20]);
    expect(dragToRect(90, 90, 120, 120)).toEqual([90, 90, 96, 96]);
  });

  it("discards zero-area drags", () => {
    expect(dragToRect(12, 30, 12, 45)).toBeNull();
    expect(dragToRect(7, 7, 7.2, 7.3)).toBeNull();
    expect(dragToRect(-20, -20, -4, -2)).toBeNull();
  });
});

describe("server overlay parity", () => {
  it("matches the service band geometry on 20 scripted drags", () => {
    expect(fixtures.cases.length).toBe(20);
    for (const c of fixtures.cases) {
      const [x0, y0, x1, y1] = c.drag as [number, number, number, number];
      const rect = dragToRect(x0, y0, x1, y1);
      expect(rect, `drag ${c.drag}`).not.toBeNull();
      expect(rect).toEqual(c.rect);
      const band = perimeterBand(rect!);
      expect(band, `band for drag ${c.drag}`).toEqual(c.band_pixels);
    }
  });

  it("solid small boxes have no hollow interior", () => {
    // 3x3 box: inner shrink is degenerate, everything is band
    const band = perimeterBand([0, 0, 3, 3]);
    expect(band.length).toBe(9);
  });
});
