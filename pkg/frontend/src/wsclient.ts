/**
 * Engine connection: hello handshake, command sending, telemetry events.
 *
 * Commands are answered in order with `status` or `error`; telemetry
 * (`playback_update`) and heartbeat `status` messages arrive
 * interleaved.  Parameter-slider scrubbing goes through a coalescing
 * throttle so at most ~60 `set_params` messages per second reach the
 * wire, always ending on the latest values.
 */

export const PROTOCOL_VERSION = 1;

export interface WireSample {
  x: number;
  y: number;
  z: number;
  amp: number;
  pt: number;
}

export interface PlaybackUpdate {
  type: "playback_update";
  samples: WireSample[];
  device_time: number;
}

export interface StatusMessage {
  type: "status";
  playing: boolean;
  finished: boolean;
  warnings: number;
  pattern_time: number;
  device_time: number;
  pattern: string | null;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
}

export type WireMessage = PlaybackUpdate | StatusMessage | ErrorMessage | { type: "hello"; protocol_version: number };

/** Minimal constructor surface shared by browser WebSocket and `ws`. */
export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "close", cb: () => void): void;
  addEventListener(type: "message", cb: (ev: { data: unknown }) => void): void;
  addEventListener(type: "error", cb: (ev: unknown) => void): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface EngineClientOptions {
  /** Injectable transport for headless tests (e.g. the `ws` package). */
  webSocketFactory?: WebSocketFactory;
  /** Minimum spacing between slider-driven set_params sends, ms. */
  throttleMs?: number;
  now?: () => number;
  setTimer?: (cb: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
}

export class EngineClient {
  private sock: WebSocketLike | null = null;
  private throttleMs: number;
  private now: () => number;
  private setTimer: (cb: () => void, ms: number) => unknown;
  private clearTimer: (handle: unknown) => void;
  private lastParamSend = -Infinity;
  private pendingParams: Record<string, number> | null = null;
  private pendingTimer: unknown = null;
  private factory: WebSocketFactory;

  connected = false;
  /** Count of set_params frames actually written to the wire. */
  paramSendCount = 0;

  onStatus: ((msg: StatusMessage) => void) | null = null;
  onTelemetry: ((msg: PlaybackUpdate) => void) | null = null;
  onProtocolError: ((msg: ErrorMessage) => void) | null = null;
  onDisconnect: (() => void) | null = null;

  constructor(readonly url: string, options: EngineClientOptions = {}) {
    this.factory = options.webSocketFactory
      ?? ((u: string) => new (globalThis as { WebSocket: new (u: string) => WebSocketLike }).WebSocket(u));
    this.throttleMs = options.throttleMs ?? 1000 / 60;
    this.now = options.now ?? (() => Date.now());
    this.setTimer = options.setTimer ?? ((cb, ms) => setTimeout(cb, ms));
    this.clearTimer = options.clearTimer ?? ((h) => clearTimeout(h as Parameters<typeof clearTimeout>[0]));
  }

  /** Open the socket and complete the hello handshake. */
  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      const sock = this.factory(this.url);
      this.sock = sock;
      let settled = false;
      sock.addEventListener("error", (e) => {
        if (!settled) {
          settled = true;
          reject(e instanceof Error ? e : new Error("websocket error"));
        }
      });
      sock.addEventListener("close", () => {
        this.connected = false;
        this.onDisconnect?.();
        if (!settled) {
          settled = true;
          reject(new Error("connection closed during handshake"));
        }
      });
      sock.addEventListener("message", (ev) => {
        let msg: WireMessage;
        try {
          msg = JSON.parse(String(ev.data)) as WireMessage;
        } catch {
          return;
        }
        if (msg.type === "hello") {
          if (msg.protocol_version !== PROTOCOL_VERSION) {
            settled = true;
            reject(new Error(`engine speaks protocol ${msg.protocol_version}`));
            sock.close();
            return;
          }
          this.send({ type: "hello", protocol_version: PROTOCOL_VERSION });
          this.connected = true;
          if (!settled) {
            settled = true;
            resolve();
          }
          return;
        }
        this.dispatch(msg);
      });
    });
  }

  private dispatch(msg: WireMessage): void {
    switch (msg.type) {
      case "status":
        this.onStatus?.(msg);
        break;
      case "playback_update":
        this.onTelemetry?.(msg);
        break;
      case "error":
        this.onProtocolError?.(msg);
        break;
    }
  }

  private send(obj: unknown): void {
    if (!this.sock) throw new Error("not connected");
    this.sock.send(JSON.stringify(obj));
  }

  updatePattern(tactonObj: unknown): void {
    this.send({ type: "update_pattern", tacton: tactonObj });
  }

  play(): void {
    this.send({ type: "play" });
  }

  stop(): void {
    this.send({ type: "stop" });
  }

  setTransform(matrix: number[]): void {
    this.send({ type: "set_transform", matrix });
  }

  /** Immediate parameter push (not throttled). */
  setParams(params: Record<string, number>): void {
    this.paramSendCount += 1;
    this.send({ type: "set_params", params });
  }

  /**
   * Slider scrubbing: coalesce rapid updates so at most one set_params
   * goes out per throttle window, always carrying the newest values.
   */
  paramSlider(name: string, value: number): void {
    this.pendingParams = { ...(this.pendingParams ?? {}), [name]: value };
    const since = this.now() - this.lastParamSend;
    if (since >= this.throttleMs) {
      this.flushParams();
      return;
    }
    if (this.pendingTimer === null) {
      this.pendingTimer = this.setTimer(() => {
        this.pendingTimer = null;
        this.flushParams();
      }, this.throttleMs - since);
    }
  }

  private flushParams(): void {
    if (!this.pendingParams) return;
    const params = this.pendingParams;
    this.pendingParams = null;
    this.lastParamSend = this.now();
    this.setParams(params);
  }

  close(): void {
    if (this.pendingTimer !== null) {
      this.clearTimer(this.pendingTimer);
      this.pendingTimer = null;
    }
    this.sock?.close();
    this.sock = null;
    this.connected = false;
  }
}
