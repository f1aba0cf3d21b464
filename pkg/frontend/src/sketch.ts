// Construct-line helpers: turn a 2D outline stroke into oriented samples.

import type { SamplePair, Vec3 } from "./commands.js";

export interface Point2 {
  x: number;
  y: number;
}

/** Resample a polyline to roughly `count` evenly spaced points. */
export function resampleOutline(points: Point2[], count = 16): Point2[] {
  if (points.length < 3) return points.slice();
  const closed = [...points, points[0]];
  let total = 0;
  const seglen: number[] = [];
  for (let i = 0; i + 1 < closed.length; i++) {
    const l = Math.hypot(closed[i + 1].x - closed[i].x, closed[i + 1].y - closed[i].y);
    seglen.push(l);
    total += l;
  }
  const out: Point2[] = [];
  let seg = 0;
  let acc = 0;
  for (let k = 0; k < count; k++) {
    const want = (k * total) / count;
    while (seg < seglen.length - 1 && acc + seglen[seg] < want) {
      acc += seglen[seg];
      seg += 1;
    }
    const t = seglen[seg] > 0 ? (want - acc) / seglen[seg] : 0;
    out.push({
      x: closed[seg].x + t * (closed[seg + 1].x - closed[seg].x),
      y: closed[seg].y + t * (closed[seg + 1].y - closed[seg].y),
    });
  }
  return out;
}

/**
 * Oriented samples on the drawing plane (z = 0): each outline point gets an
 * in-plane outward normal, so the fitted surface inflates around the stroke.
 */
export function outlineToSamples(points: Point2[], count = 16): SamplePair[] {
  const pts = resampleOutline(points, count);
  if (pts.length < 4) throw new Error("outline needs at least 4 points");
  // signed area decides which perpendicular points outward
  let area = 0;
  for (let i = 0; i < pts.length; i++) {
    const a = pts[i];
    const b = pts[(i + 1) % pts.length];
    area += a.x * b.y - b.x * a.y;
  }
  const sign = area >= 0 ? 1 : -1;
  const samples: SamplePair[] = [];
  for (let i = 0; i < pts.length; i++) {
    const prev = pts[(i - 1 + pts.length) % pts.length];
    const next = pts[(i + 1) % pts.length];
    const tx = next.x - prev.x;
    const ty = next.y - prev.y;
    const len = Math.hypot(tx, ty);
    if (len === 0) continue;
    const n: Vec3 = [sign * ty / len, -sign * tx / len, 0];
    samples.push([[pts[i].x, pts[i].y, 0], n]);
  }
  return samples;
}

export function outlineBBox(points: Point2[]): { lo: Point2; hi: Point2 } {
  const lo = { x: Infinity, y: Infinity };
  const hi = { x: -Infinity, y: -Infinity };
  for (const p of points) {
    lo.x = Math.min(lo.x, p.x);
    lo.y = Math.min(lo.y, p.y);
    hi.x = Math.max(hi.x, p.x);
    hi.y = Math.max(hi.y, p.y);
  }
  return { lo, hi };
}
