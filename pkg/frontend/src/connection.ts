/** Session binding: websocket stream ingestion, staleness detection,
 * reconnection with backoff, and the HTTP command transport.
 *
 * The socket constructor and fetch function are injectable so the whole
 * pipeline runs under test without a browser.
 */

import type { CockpitStore } from "./store.js";
import type { CommandPayload, StreamMessage } from "./types.js";

export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;
export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export interface ConnectionOptions {
  socketFactory?: SocketFactory;
  fetchFn?: FetchLike;
  /** ticks of silence before the view is flagged stale */
  staleTicks?: number;
  maxBackoffMs?: number;
  timers?: {
    setTimeout: (fn: () => void, ms: number) => unknown;
    clearTimeout: (handle: unknown) => void;
  };
}

export class SessionConnection {
  private socket: SocketLike | null = null;
  private staleHandle: unknown = null;
  private reconnectAttempts = 0;
  private closedByUser = false;
  private readonly socketFactory: SocketFactory;
  private readonly fetchFn: FetchLike;
  private readonly staleTicks: number;
  private readonly maxBackoffMs: number;
  private readonly timers: NonNullable<ConnectionOptions["timers"]>;

  constructor(
    readonly baseUrl: string,
    readonly sessionId: string,
    readonly store: CockpitStore,
    options: ConnectionOptions = {},
  ) {
    this.socketFactory =
      options.socketFactory ??
      ((url) => new WebSocket(url) as unknown as SocketLike);
    this.fetchFn = options.fetchFn ?? (fetch as unknown as FetchLike);
    this.staleTicks = options.staleTicks ?? 3;
    this.maxBackoffMs = options.maxBackoffMs ?? 10_000;
    this.timers = options.timers ?? {
      setTimeout: (fn, ms) => setTimeout(fn, ms),
      clearTimeout: (h) => clearTimeout(h as ReturnType<typeof setTimeout>),
    };
  }

  get streamUrl(): string {
    const ws = this.baseUrl.replace(/^http/, "ws");
    return `${ws}/sessions/${this.sessionId}/stream`;
  }

  connect(): void {
    this.closedByUser = false;
    this.store.setStatus("connecting");
    const socket = this.socketFactory(this.streamUrl);
    this.socket = socket;
    socket.onopen = () => {
      this.reconnectAttempts = 0;
    };
    socket.onmessage = (ev) => {
      const msg = JSON.parse(ev.data) as StreamMessage;
      this.store.ingest(msg);
      this.store.setStatus("live");
      this.armStaleTimer();
    };
    socket.onerror = () => socket.close();
    socket.onclose = () => {
      this.disarmStaleTimer();
      if (this.closedByUser) {
        this.store.setStatus("closed");
        return;
      }
      this.store.setStatus("stale");
      const backoff = Math.min(
        500 * 2 ** this.reconnectAttempts,
        this.maxBackoffMs,
      );
      this.reconnectAttempts++;
      this.timers.setTimeout(() => this.connect(), backoff);
    };
  }

  close(): void {
    this.closedByUser = true;
    this.disarmStaleTimer();
    this.socket?.close();
  }

  private armStaleTimer(): void {
    this.disarmStaleTimer();
    const ms = this.store.bounds.dtSample * 1000 * this.staleTicks;
    this.staleHandle = this.timers.setTimeout(() => {
      this.store.setStatus("stale");
    }, ms);
  }

  private disarmStaleTimer(): void {
    if (this.staleHandle !== null) {
      this.timers.clearTimeout(this.staleHandle);
      this.staleHandle = null;
    }
  }

  /** Command transport for the gate: POSTs to the session endpoint. */
  async send(payload: CommandPayload): Promise<unknown> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/sessions/${this.sessionId}/command`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(payload),
      },
    );
    if (!resp.ok) {
      throw new Error(`command rejected with status ${resp.status}`);
    }
    return resp.json();
  }
}

/** Create a session on the service and return its id plus bounds. */
export async function createSession(
  baseUrl: string,
  fetchFn: FetchLike = fetch as unknown as FetchLike,
  body?: Record<string, unknown>,
): Promise<{
  session_id: string;
  dt_sample: number;
  p_human_max: number;
  eta: number;
}> {
  const resp = await fetchFn(`${baseUrl}/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body ?? {}),
  });
  if (!resp.ok) throw new Error(`session refused with status ${resp.status}`);
  return (await resp.json()) as {
    session_id: string;
    dt_sample: number;
    p_human_max: number;
    eta: number;
  };
}
