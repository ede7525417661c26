/** ROI geometry: the selection is drawn in display (CSS) pixels but the
 * service speaks natural image pixels, so every rectangle crossing the
 * wire goes through these pure conversions. Scaling is strictly a display
 * concern; nothing here touches the DOM. */

import type { Rect } from "./types.js";

export interface DisplayMetrics {
  displayWidth: number;
  displayHeight: number;
  naturalWidth: number;
  naturalHeight: number;
}

function clamp(value: number, lo: number, hi: number): number {
  return Math.min(Math.max(value, lo), hi);
}

/** Normalize a drag gesture (any corner order) into a display-space rect. */
export function dragToDisplayRect(x0: number, y0: number, x1: number, y1: number): Rect {
  return {
    x: Math.min(x0, x1),
    y: Math.min(y0, y1),
    w: Math.abs(x1 - x0),
    h: Math.abs(y1 - y0),
  };
}

/** Convert a display-space rect to natural image pixels: scale by the
 * natural/display ratio, round to integers, clamp into bounds. Degenerate
 * selections (under one natural pixel in either direction) yield null. */
export function displayToNatural(rect: Rect, m: DisplayMetrics): Rect | null {
  if (m.displayWidth <= 0 || m.displayHeight <= 0 || m.naturalWidth <= 0 || m.naturalHeight <= 0) {
    return null;
  }
  const sx = m.naturalWidth / m.displayWidth;
  const sy = m.naturalHeight / m.displayHeight;
  const w = Math.round(rect.w * sx);
  const h = Math.round(rect.h * sy);
  if (w < 1 || h < 1) return null;
  const x = clamp(Math.round(rect.x * sx), 0, m.naturalWidth - 1);
  const y = clamp(Math.round(rect.y * sy), 0, m.naturalHeight - 1);
  return {
    x,
    y,
    w: Math.min(w, m.naturalWidth - x),
    h: Math.min(h, m.naturalHeight - y),
  };
}

/** Map a natural-pixel rect back onto the display (no rounding; CSS pixels
 * may be fractional). */
export function naturalToDisplay(rect: Rect, m: DisplayMetrics): Rect {
  const sx = m.displayWidth / m.naturalWidth;
  const sy = m.displayHeight / m.naturalHeight;
  return { x: rect.x * sx, y: rect.y * sy, w: rect.w * sx, h: rect.h * sy };
}

/** Percent-based placement of a natural-pixel box inside its image, for
 * overlays that must track the thumbnail's responsive size. */
export function rectToPercent(rect: Rect, naturalWidth: number, naturalHeight: number): {
  left: string;
  top: string;
  width: string;
  height: string;
} {
  return {
    left: `${(rect.x / naturalWidth) * 100}%`,
    top: `${(rect.y / naturalHeight) * 100}%`,
    width: `${(rect.w / naturalWidth) * 100}%`,
    height: `${(rect.h / naturalHeight) * 100}%`,
  };
}
