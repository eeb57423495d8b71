import type { ConfigWire, Route, StatsWire } from "./types.js";
import type { CurvePoint } from "./curve.js";

/** Rolling event window size. */
export const EVENT_WINDOW = 50;

export interface RouteEntry {
  kind: "route";
  id: string | null;
  route: Route;
  score: number;
  latencyMs: number;
}

/** Rendered into the ticker when the event stream dropped and reconnected:
 * events between the drop and the reconnect were never observed. */
export interface GapEntry {
  kind: "gap";
  note: string;
}

export type TickerEntry = RouteEntry | GapEntry;

export interface ConsoleState {
  connected: boolean;
  config: ConfigWire | null;
  stats: StatsWire | null;
  curve: CurvePoint[] | null;
  events: TickerEntry[];
  /** UI slider position; equals the acknowledged threshold except mid-drag. */
  sliderThreshold: number | null;
  lastError: string | null;
}

export function initialState(): ConsoleState {
  return {
    connected: false,
    config: null,
    stats: null,
    curve: null,
    events: [],
    sliderThreshold: null,
    lastError: null,
  };
}

/** Append in arrival order, keeping the last EVENT_WINDOW entries. */
export function pushTicker(entries: TickerEntry[], entry: TickerEntry): TickerEntry[] {
  const next = entries.concat(entry);
  return next.length > EVENT_WINDOW ? next.slice(next.length - EVENT_WINDOW) : next;
}
