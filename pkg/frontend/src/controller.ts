import type { GatewayClient, GatewayEvent, StreamStatus } from "./gateway.js";
import type { ConsoleState } from "./state.js";
import type { Route } from "./types.js";
import { initialState, pushTicker } from "./state.js";
import { decodeCurve, nearestIndex } from "./curve.js";
import { thresholdFromWire, thresholdToWire } from "./wire.js";

/** Binds the gateway client to console state.
 *
 * The state is reproducible from GETs alone (refresh re-reads everything);
 * applyThreshold is the only call that mutates the gateway.
 */
export class ConsoleController {
  readonly state: ConsoleState;
  private unsubscribe: (() => void) | null = null;
  private applying = 0;

  constructor(
    private readonly client: GatewayClient,
    private readonly onChange: () => void = () => {},
  ) {
    this.state = initialState();
  }

  async start(): Promise<void> {
    await this.refresh();
    this.unsubscribe = this.client.subscribeEvents(
      (event) => this.handleEvent(event),
      (status) => this.handleStatus(status),
    );
  }

  stop(): void {
    this.unsubscribe?.();
    this.unsubscribe = null;
  }

  /** Re-read config, stats, and curve; the whole view follows from these. */
  async refresh(): Promise<void> {
    try {
      const [config, stats, curve] = await Promise.all([
        this.client.getConfig(),
        this.client.getStats(),
        this.client.getCurve(),
      ]);
      this.state.config = config;
      this.state.stats = stats;
      this.state.curve = curve ? decodeCurve(curve.points) : null;
      if (this.applying === 0) {
        this.state.sliderThreshold = thresholdFromWire(config.policy.threshold);
      }
      this.state.connected = true;
    } catch (err) {
      this.state.connected = false;
      this.state.lastError = String(err);
    }
    this.onChange();
  }

  /** The last acknowledged threshold, which the operating point follows. */
  ackedThreshold(): number | null {
    const config = this.state.config;
    return config ? thresholdFromWire(config.policy.threshold) : null;
  }

  /** Curve index of the displayed operating point (marker), if showable. */
  markerIndex(): number | null {
    const t = this.ackedThreshold();
    if (t === null || !this.state.curve || this.state.curve.length === 0) return null;
    return nearestIndex(this.state.curve, t);
  }

  /** Live slider position during a drag, before any PUT. */
  setSlider(value: number): void {
    this.state.sliderThreshold = value;
    this.onChange();
  }

  /** PUT the new threshold. On rejection or transport failure the slider
   * reverts to the pre-drag (acknowledged) position. */
  async applyThreshold(value: number): Promise<boolean> {
    const preDrag = this.ackedThreshold();
    this.state.sliderThreshold = value;
    this.onChange();
    this.applying += 1;
    try {
      const result = await this.client.putConfig({
        policy: { threshold: thresholdToWire(value) },
      });
      if (result.ok) {
        this.state.config = result.config;
        this.state.sliderThreshold = thresholdFromWire(result.config.policy.threshold);
        this.state.lastError = null;
        return true;
      }
      this.state.sliderThreshold = preDrag;
      this.state.lastError = result.error;
      return false;
    } finally {
      this.applying -= 1;
      this.onChange();
    }
  }

  private handleEvent(event: GatewayEvent): void {
    if (event.type === "route") {
      this.state.events = pushTicker(this.state.events, {
        kind: "route",
        id: (event.id as string | null) ?? null,
        route: event.route as Route,
        score: Number(event.score),
        latencyMs: Number(event.latency_ms),
      });
      this.onChange();
    } else if (event.type === "drop") {
      // the gateway cut us off as a slow subscriber; the pump will reconnect
      this.state.events = pushTicker(this.state.events, {
        kind: "gap",
        note: "stream dropped by gateway; events may be missing",
      });
      this.onChange();
    }
  }

  private handleStatus(status: StreamStatus): void {
    if (status.kind === "connected") {
      this.state.connected = true;
      // counters may have moved while we were blind
      void this.refresh();
    } else {
      this.state.connected = false;
      this.state.events = pushTicker(this.state.events, {
        kind: "gap",
        note: "event stream lost; reconnecting",
      });
    }
    this.onChange();
  }
}
