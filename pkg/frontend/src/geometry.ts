// Box geometry in scene-image pixel space. The preview band must match the
// server's overlay rule exactly: a 2-px perimeter drawn inward from the rect.
import { IMAGE_RES } from "./schema.js";

export const LINE_WIDTH = 2;

export type Rect = [number, number, number, number]; // x0, y0, x1, y1 (x1/y1 exclusive)

export function clampPx(v: number): number {
  return Math.max(0, Math.min(IMAGE_RES, Math.round(v)));
}

/** Normalize a drag gesture into a valid rect, or null for a degenerate one. */
export function dragToRect(x0: number, y0: number, x1: number, y1: number): Rect | null {
  const ax0 = clampPx(Math.min(x0, x1));
  const ax1 = clampPx(Math.max(x0, x1));
  const ay0 = clampPx(Math.min(y0, y1));
  const ay1 = clampPx(Math.max(y0, y1));
  if (ax1 - ax0 < 1 || ay1 - ay0 < 1) return null;
  return [ax0, ay0, ax1, ay1];
}

/** Flat pixel indices (y * res + x) of the inward 2-px perimeter band. */
export function perimeterBand(rect: Rect, res = IMAGE_RES): number[] {
  const [x0, y0, x1, y1] = rect;
  const ix0 = x0 + LINE_WIDTH;
  const iy0 = y0 + LINE_WIDTH;
  const ix1 = x1 - LINE_WIDTH;
  const iy1 = y1 - LINE_WIDTH;
  const hollow = ix1 > ix0 && iy1 > iy0;
  const out: number[] = [];
  for (let y = y0; y < y1; y++) {
    for (let x = x0; x < x1; x++) {
      if (hollow && x >= ix0 && x < ix1 && y >= iy0 && y < iy1) continue;
      out.push(y * res + x);
    }
  }
  return out;
}
