import { describe, expect, it } from "vitest";

import { CommandGate, buildSetHumanPower } from "./commands.js";
import { SessionConnection, type SocketLike } from "./connection.js";
import { makeHello, thresholdCrossing } from "./fixtures.js";
import { CockpitStore } from "./store.js";

class FakeSocket implements SocketLike {
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  closed = false;

  open(): void {
    this.onopen?.();
  }

  deliver(msg: unknown): void {
    this.onmessage?.({ data: JSON.stringify(msg) });
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }
}

class FakeTimers {
  pending: { fn: () => void; ms: number; id: number }[] = [];
  private next = 1;

  setTimeout = (fn: () => void, ms: number): unknown => {
    const id = this.next++;
    this.pending.push({ fn, ms, id });
    return id;
  };

  clearTimeout = (handle: unknown): void => {
    this.pending = this.pending.filter((p) => p.id !== handle);
  };

  fire(): void {
    const jobs = this.pending;
    this.pending = [];
    jobs.forEach((j) => j.fn());
  }
}

function wire() {
  const store = new CockpitStore();
  const sockets: FakeSocket[] = [];
  const posts: { url: string; body: string }[] = [];
  const timers = new FakeTimers();
  const conn = new SessionConnection("http://svc", "abc123", store, {
    socketFactory: () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    fetchFn: async (url, init) => {
      posts.push({ url, body: init?.body ?? "" });
      return { ok: true, status: 200, json: async () => ({ applied_tick: 1 }) };
    },
    timers,
    staleTicks: 3,
  });
  return { store, sockets, posts, timers, conn };
}

describe("SessionConnection", () => {
  it("streams into the store and goes live", () => {
    const { store, sockets, conn } = wire();
    conn.connect();
    expect(conn.streamUrl).toBe("ws://svc/sessions/abc123/stream");
    const sock = sockets[0];
    sock.open();
    sock.deliver(makeHello());
    expect(store.status).toBe("live");
    for (const tick of thresholdCrossing(3, 2, 1)) sock.deliver(tick);
    expect(store.visibleTicks().length).toBe(6);
  });

  it("mode banner flips on the exact streamed tick end to end", () => {
    const { store, sockets, conn } = wire();
    conn.connect();
    sockets[0].open();
    sockets[0].deliver(makeHello());
    for (const tick of thresholdCrossing(4, 3, 2)) sockets[0].deliver(tick);
    expect(store.bannerFlips).toEqual([
      { index: 4, mode: "competitive" },
      { index: 7, mode: "cooperative" },
    ]);
  });

  it("flags stale data and disables commands after silence", () => {
    const { store, sockets, timers, conn } = wire();
    conn.connect();
    sockets[0].open();
    sockets[0].deliver(makeHello());
    expect(store.commandsEnabled).toBe(true);
    timers.fire(); // stale timer expires with no further messages
    expect(store.status).toBe("stale");
    expect(store.commandsEnabled).toBe(false);
  });

  it("reconnects after a drop and re-enables on traffic", () => {
    const { store, sockets, timers, conn } = wire();
    conn.connect();
    sockets[0].open();
    sockets[0].deliver(makeHello());
    sockets[0].close(); // dropped by the network
    expect(store.status).toBe("stale");
    timers.fire(); // backoff elapses -> new socket
    expect(sockets.length).toBe(2);
    sockets[1].open();
    sockets[1].deliver(makeHello({ latest_index: 9 }));
    expect(store.status).toBe("live");
  });

  it("posts schema-valid commands to the session endpoint", async () => {
    const { store, sockets, posts, conn } = wire();
    conn.connect();
    sockets[0].open();
    sockets[0].deliver(makeHello());
    const gate = new CommandGate(conn, () => store.commandsEnabled);
    await gate.issue(buildSetHumanPower(180, store.bounds));
    expect(posts).toEqual([
      {
        url: "http://svc/sessions/abc123/command",
        body: JSON.stringify({ cmd: "set_human_power", value: 180 }),
      },
    ]);
  });

  it("user close is final", () => {
    const { store, sockets, timers, conn } = wire();
    conn.connect();
    sockets[0].open();
    sockets[0].deliver(makeHello());
    conn.close();
    expect(store.status).toBe("closed");
    timers.fire();
    expect(sockets.length).toBe(1); // no reconnect scheduled
  });
});
