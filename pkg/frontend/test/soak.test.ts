import { describe, expect, it } from "vitest";
import { BridgeConnection } from "../src/connection.js";
import type { WebSocketLike } from "../src/connection.js";
import { stateLines } from "./util.js";

/** Replays the recorded state stream through a fake socket. */
function fakeSocketFeeding(lines: string[]): {
  factory: () => WebSocketLike;
  drive: () => void;
} {
  let sock: WebSocketLike | null = null;
  const factory = () => {
    sock = {
      onopen: null,
      onclose: null,
      onerror: null,
      onmessage: null,
      send: () => {},
      close: () => {},
    };
    queueMicrotask(() => sock!.onopen?.());
    return sock;
  };
  const drive = () => {
    for (const l of lines) sock!.onmessage?.({ data: l });
  };
  return { factory, drive };
}

describe("60 s replayed log soak", () => {
  it("decodes 1200 states with zero schema errors and monotone sim time", () => {
    const lines = stateLines();
    expect(lines.length).toBe(1200);
    const seen: number[] = [];
    const { factory, drive } = fakeSocketFeeding(lines);
    const conn = new BridgeConnection("ws://test/", factory, {
      onState: (s) => seen.push(s.t),
    });
    conn.connect();
    drive();
    expect(conn.schemaErrors).toBe(0);
    expect(seen.length).toBe(1200);
    for (let i = 1; i < seen.length; i++) {
      expect(seen[i]!).toBeGreaterThan(seen[i - 1]!);
    }
    expect(seen[seen.length - 1]!).toBeCloseTo(60.0, 6);
    conn.close();
  });
});
