/** Bridge connection: subscribes to the state stream, keeps only the latest
 * state (rendering is decoupled from the 20 Hz message rate), validates every
 * outgoing command, and reconnects with a banner while the bridge is down. */
import {
  CommandMessage,
  ServerMessage,
  StateMessage,
  encodeCommand,
  parseServerMessage,
} from "./messages.js";

/** Minimal WebSocket surface used here; satisfied by both the browser class
 * and the `ws` package. */
export interface WebSocketLike {
  onopen: ((ev?: any) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((ev?: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  send(data: string): void;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface ConnectionEvents {
  onState?: (s: StateMessage) => void;
  onServerError?: (message: string) => void;
  onBanner?: (text: string | null) => void; // null clears the banner
  onSchemaError?: (e: Error) => void;
}

export const RETRY_MS = 1000;

export class BridgeConnection {
  latest: StateMessage | null = null;
  schemaErrors = 0;
  private sock: WebSocketLike | null = null;
  private closed = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    readonly url: string,
    private readonly factory: WebSocketFactory,
    private readonly events: ConnectionEvents = {},
  ) {}

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    const sock = this.factory(this.url);
    this.sock = sock;
    sock.onopen = () => this.events.onBanner?.(null);
    sock.onmessage = (ev) => this.handle(String(ev.data));
    sock.onerror = () => {
      /* onclose follows and schedules the retry */
    };
    sock.onclose = () => {
      this.sock = null;
      if (this.closed) return;
      this.events.onBanner?.("bridge unreachable - retrying...");
      this.retryTimer = setTimeout(() => this.open(), RETRY_MS);
    };
  }

  private handle(text: string): void {
    let msg: ServerMessage;
    try {
      msg = parseServerMessage(text);
    } catch (e) {
      this.schemaErrors += 1;
      this.events.onSchemaError?.(e as Error);
      return;
    }
    if (msg.type === "error") {
      this.events.onServerError?.(msg.message);
      return;
    }
    this.latest = msg; // latest-state slot
    this.events.onState?.(msg);
  }

  /** Validate and send; throws SchemaError instead of emitting a bad frame. */
  send(cmd: CommandMessage): void {
    const text = encodeCommand(cmd);
    if (!this.sock) throw new Error("not connected");
    this.sock.send(text);
  }

  close(): void {
    this.closed = true;
    if (this.retryTimer) clearTimeout(this.retryTimer);
    this.sock?.close();
    this.sock = null;
  }
}
