import type { CurvePointWire } from "./types.js";
import { thresholdFromWire } from "./wire.js";

export interface CurvePoint {
  threshold: number;
  accuracy: number;
  expectedCost: number;
  studentFraction: number;
}

/** Decode wire points and order them by threshold ascending. */
export function decodeCurve(points: CurvePointWire[]): CurvePoint[] {
  return points
    .map((p) => ({
      threshold: thresholdFromWire(p.threshold),
      accuracy: p.accuracy,
      expectedCost: p.expected_cost,
      studentFraction: p.student_fraction,
    }))
    .sort((a, b) => (a.threshold < b.threshold ? -1 : a.threshold > b.threshold ? 1 : 0));
}

/** Index of the curve point whose threshold is nearest to t.
 *
 * An exact match wins (that also covers the infinite sentinels, where plain
 * subtraction would give NaN); otherwise the nearest finite threshold by
 * absolute distance, first point on ties.
 */
export function nearestIndex(points: CurvePoint[], t: number): number {
  if (points.length === 0) throw new Error("empty curve");
  let best = 0;
  let bestDistance = Infinity;
  for (let i = 0; i < points.length; i++) {
    const th = points[i]!.threshold;
    const distance = th === t ? -1 : Math.abs(th - t);
    if (!Number.isNaN(distance) && distance < bestDistance) {
      best = i;
      bestDistance = distance;
    }
  }
  return best;
}

/** Numeric-entry bounds: the finite threshold span padded by 5% per side. */
export function sliderBounds(points: CurvePoint[]): { lo: number; hi: number } {
  const finite = points.map((p) => p.threshold).filter((t) => Number.isFinite(t));
  if (finite.length === 0) return { lo: -1, hi: 1 };
  const lo = Math.min(...finite);
  const hi = Math.max(...finite);
  const pad = hi > lo ? 0.05 * (hi - lo) : 1;
  return { lo: lo - pad, hi: hi + pad };
}

/** The slider's notches: the curve's threshold grid in ascending order. */
export function gridThresholds(points: CurvePoint[]): number[] {
  return points.map((p) => p.threshold);
}

/** Index of the all-Teacher end: minimum student fraction, largest threshold on ties. */
export function allTeacherIndex(points: CurvePoint[]): number {
  if (points.length === 0) throw new Error("empty curve");
  let best = 0;
  for (let i = 1; i < points.length; i++) {
    const p = points[i]!;
    const b = points[best]!;
    if (
      p.studentFraction < b.studentFraction ||
      (p.studentFraction === b.studentFraction && p.threshold > b.threshold)
    ) {
      best = i;
    }
  }
  return best;
}
