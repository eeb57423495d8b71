import type { ConfigWire, CurveWire, StatsWire } from "./types.js";

export type PutResult =
  | { ok: true; config: ConfigWire }
  | { ok: false; error: string };

export type StreamStatus =
  | { kind: "connected" }
  | { kind: "dropped"; reason: string };

export interface GatewayEvent {
  type: string;
  [key: string]: unknown;
}

export interface GatewayClientOptions {
  /** Injectable for tests. */
  fetchImpl?: typeof fetch;
  /** Delay before an event-stream reconnect attempt. */
  retryDelayMs?: number;
}

/** Incremental text/event-stream parser; emits each frame's data payload.
 *
 * Handles frames split across chunks, CRLF line endings, comment keepalives,
 * and multi-line data fields. Non-data fields (event, id, retry) are ignored,
 * matching what the gateway sends.
 */
export function createSseParser(onData: (data: string) => void): { push(chunk: string): void } {
  let buffer = "";
  let dataLines: string[] = [];

  const handleLine = (line: string) => {
    if (line === "") {
      if (dataLines.length > 0) onData(dataLines.join("\n"));
      dataLines = [];
      return;
    }
    if (line.startsWith(":")) return;
    if (line.startsWith("data:")) {
      let value = line.slice(5);
      if (value.startsWith(" ")) value = value.slice(1);
      dataLines.push(value);
    }
  };

  return {
    push(chunk: string) {
      buffer += chunk;
      for (;;) {
        const newline = buffer.indexOf("\n");
        if (newline < 0) return;
        let line = buffer.slice(0, newline);
        buffer = buffer.slice(newline + 1);
        if (line.endsWith("\r")) line = line.slice(0, -1);
        handleLine(line);
      }
    },
  };
}

export class GatewayClient {
  private readonly fetchImpl: typeof fetch;
  private readonly retryDelayMs: number;

  constructor(
    readonly baseUrl: string,
    options: GatewayClientOptions = {},
  ) {
    this.fetchImpl = options.fetchImpl ?? fetch.bind(globalThis);
    this.retryDelayMs = options.retryDelayMs ?? 1000;
  }

  private async getJson<T>(path: string): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path);
    if (!res.ok) throw new Error(`GET ${path} failed: http ${res.status}`);
    return (await res.json()) as T;
  }

  getConfig(): Promise<ConfigWire> {
    return this.getJson<ConfigWire>("/v1/config");
  }

  getStats(): Promise<StatsWire> {
    return this.getJson<StatsWire>("/v1/stats");
  }

  /** null when the gateway has no curve loaded yet. */
  async getCurve(): Promise<CurveWire | null> {
    const res = await this.fetchImpl(this.baseUrl + "/v1/curve");
    if (res.status === 404) return null;
    if (!res.ok) throw new Error(`GET /v1/curve failed: http ${res.status}`);
    return (await res.json()) as CurveWire;
  }

  /** Partial config update. Never throws: failures come back as ok: false. */
  async putConfig(update: object): Promise<PutResult> {
    try {
      const res = await this.fetchImpl(this.baseUrl + "/v1/config", {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(update),
      });
      const body: unknown = await res.json().catch(() => null);
      if (!res.ok) {
        const detail =
          body !== null && typeof body === "object" && "detail" in body
            ? String((body as { detail: unknown }).detail)
            : `http ${res.status}`;
        return { ok: false, error: detail };
      }
      return { ok: true, config: body as ConfigWire };
    } catch (err) {
      return { ok: false, error: String(err) };
    }
  }

  /** Follow /v1/events, reconnecting forever until the returned stop is called.
   *
   * onStatus sees "connected" per successful attach and "dropped" per lost
   * stream, so callers can render gap notices.
   */
  subscribeEvents(
    onEvent: (event: GatewayEvent) => void,
    onStatus: (status: StreamStatus) => void,
  ): () => void {
    let stopped = false;
    let controller = new AbortController();

    const pump = async () => {
      while (!stopped) {
        controller = new AbortController();
        try {
          const res = await this.fetchImpl(this.baseUrl + "/v1/events", {
            headers: { accept: "text/event-stream" },
            signal: controller.signal,
          });
          if (!res.ok || !res.body) throw new Error(`http ${res.status}`);
          onStatus({ kind: "connected" });
          const reader = res.body.getReader();
          const decoder = new TextDecoder();
          const parser = createSseParser((data) => {
            try {
              onEvent(JSON.parse(data) as GatewayEvent);
            } catch {
              // non-JSON data frames carry nothing we render
            }
          });
          for (;;) {
            const { done, value } = await reader.read();
            if (done) break;
            parser.push(decoder.decode(value, { stream: true }));
          }
          throw new Error("stream ended");
        } catch (err) {
          if (stopped) return;
          onStatus({ kind: "dropped", reason: String(err) });
          await new Promise((resolve) => setTimeout(resolve, this.retryDelayMs));
        }
      }
    };

    void pump();
    return () => {
      stopped = true;
      controller.abort();
    };
  }
}
