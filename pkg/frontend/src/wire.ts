import type { ThresholdWire } from "./types.js";

const POSITIVE = new Set(["inf", "+inf", "infinity", "+infinity"]);
const NEGATIVE = new Set(["-inf", "-infinity"]);

export function thresholdFromWire(value: ThresholdWire): number {
  if (typeof value === "number") {
    if (Number.isNaN(value)) throw new Error("threshold cannot be NaN");
    return value;
  }
  const text = value.trim().toLowerCase();
  if (POSITIVE.has(text)) return Infinity;
  if (NEGATIVE.has(text)) return -Infinity;
  throw new Error(`unrecognized threshold ${JSON.stringify(value)}`);
}

export function thresholdToWire(value: number): ThresholdWire {
  if (Number.isNaN(value)) throw new Error("threshold cannot be NaN");
  if (value === Infinity) return "inf";
  if (value === -Infinity) return "-inf";
  return value;
}

/** Compact human-readable form for labels and the ticker. */
export function formatThreshold(value: number): string {
  if (value === Infinity) return "inf";
  if (value === -Infinity) return "-inf";
  const abs = Math.abs(value);
  if (abs !== 0 && (abs >= 1e6 || abs < 1e-4)) return value.toExponential(3);
  return String(Number(value.toPrecision(6)));
}
