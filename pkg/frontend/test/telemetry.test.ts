import { describe, expect, it } from "vitest";
import { RollingSeries, TelemetryPanel } from "../src/telemetry.js";
import { someStates } from "./util.js";

describe("rolling series", () => {
  it("keeps at most capacity points", () => {
    const s = new RollingSeries(3);
    [1, 2, 3, 4, 5].forEach((v) => s.push(v));
    expect(s.values()).toEqual([3, 4, 5]);
    expect(s.last()).toBe(5);
  });

  it("rejects a nonsense capacity", () => {
    expect(() => new RollingSeries(0)).toThrow();
  });
});

describe("telemetry panel", () => {
  it("readouts equal the latest state message exactly", () => {
    const states = someStates(200);
    const panel = new TelemetryPanel();
    for (const msg of states) panel.update(msg);
    const last = states[states.length - 1];
    if (!last) throw new Error("no states in fixture");
    const r = panel.readouts()!;
    expect(r.r_imi).toBe(last.reward.r_imi);
    expect(r.err_c).toBe(last.reward.err_c);
    expect(r.tracking_error).toBe(last.metrics.last_tracking_error);
    expect(r.ee_force).toBe(last.robots[0]!.ee_force);
    expect(panel.rImi.last()).toBe(last.reward.r_imi);
  });
});
