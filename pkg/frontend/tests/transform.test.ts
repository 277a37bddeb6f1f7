import { describe, expect, it } from "vitest";

import { MAX_ZOOM, MIN_ZOOM, ViewTransform } from "../src/transform.js";

describe("ViewTransform", () => {
  it("round-trips image->screen->image within 0.5px across the zoom range", () => {
    for (const zoom of [0.5, 1, 1.7, 2, 4, 8]) {
      const view = new ViewTransform(zoom, 123.4, -56.7);
      for (let i = 0; i < 200; i++) {
        const p = { x: (i * 97.3) % 1920, y: (i * 41.7) % 1080 };
        const back = view.screenToImage(view.imageToScreen(p));
        expect(Math.abs(back.x - p.x)).toBeLessThanOrEqual(0.5);
        expect(Math.abs(back.y - p.y)).toBeLessThanOrEqual(0.5);
      }
    }
  });

  it("zoomAt keeps the anchor point fixed", () => {
    const view = new ViewTransform(1, 10, 20);
    const anchor = { x: 300, y: 200 };
    const before = view.screenToImage(anchor);
    view.zoomAt(anchor, 2);
    const after = view.screenToImage(anchor);
    expect(after.x).toBeCloseTo(before.x, 9);
    expect(after.y).toBeCloseTo(before.y, 9);
    expect(view.zoom).toBe(2);
  });

  it("clamps zoom to the supported range", () => {
    const view = new ViewTransform();
    view.zoomAt({ x: 0, y: 0 }, 1000);
    expect(view.zoom).toBe(MAX_ZOOM);
    view.zoomAt({ x: 0, y: 0 }, 1e-6);
    expect(view.zoom).toBe(MIN_ZOOM);
  });

  it("pan shifts screen coordinates only", () => {
    const view = new ViewTransform(2, 0, 0);
    const image = { x: 50, y: 60 };
    const before = view.imageToScreen(image);
    view.panBy(15, -5);
    const after = view.imageToScreen(image);
    expect(after.x - before.x).toBe(15);
    expect(after.y - before.y).toBe(-5);
  });
});
