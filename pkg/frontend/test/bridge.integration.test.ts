/** Loopback tests against a live bridge served by the backend CLI. Skipped
 * when the backend is not installed in the environment. */
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import WebSocket from "ws";
import { parseServerMessage, setTargetTwist, teleop } from "../src/messages.js";
import type { StateMessage } from "../src/messages.js";

const PYTHON = process.env.PYTHON ?? "python3";

function backendAvailable(): boolean {
  const probe = spawnSync(PYTHON, ["-c", "import chainmover"], { timeout: 30000 });
  return probe.status === 0;
}

const HAVE_BACKEND = backendAvailable();
const maybe = HAVE_BACKEND ? describe : describe.skip;

maybe("live bridge loopback", () => {
  let work: string;
  let proc: ChildProcess;
  let port: number;
  let ws: WebSocket;
  const states: StateMessage[] = [];

  beforeAll(async () => {
    work = mkdtempSync(join(tmpdir(), "ui-bridge-"));
    const gen = spawnSync(
      PYTHON,
      ["-m", "chainmover.cli", "gen-demos", "--out", work, "--run-name", "d",
       "--count", "3", "--seed", "0"],
      { timeout: 120000 },
    );
    expect(gen.status).toBe(0);
    proc = spawn(PYTHON, [
      "-m", "chainmover.cli", "bridge",
      "--demos", join(work, "d", "demos"),
      "--seed", "3", "--port", "0", "--pace", "2.0",
    ]);
    port = await new Promise<number>((resolve, reject) => {
      let buf = "";
      const timer = setTimeout(() => reject(new Error(`no banner: ${buf}`)), 60000);
      proc.stdout!.on("data", (d: Buffer) => {
        buf += d.toString();
        const m = buf.match(/ws:\/\/[^:]+:(\d+)\//);
        if (m) {
          clearTimeout(timer);
          resolve(Number(m[1]));
        }
      });
      proc.on("exit", (code) => reject(new Error(`bridge exited ${code}: ${buf}`)));
    });
    ws = new WebSocket(`ws://127.0.0.1:${port}/`);
    await new Promise<void>((resolve, reject) => {
      ws.on("open", () => resolve());
      ws.on("error", reject);
    });
    ws.on("message", (data) => {
      const msg = parseServerMessage(data.toString());
      if (msg.type === "state") states.push(msg);
    });
  }, 240000);

  afterAll(() => {
    ws?.close();
    proc?.kill();
    rmSync(work, { recursive: true, force: true });
  });

  function waitFor(
    pred: (s: StateMessage) => boolean,
    ms: number,
  ): Promise<StateMessage> {
    return new Promise((resolve, reject) => {
      const t0 = Date.now();
      const poll = setInterval(() => {
        const hit = states.find(pred);
        if (hit) {
          clearInterval(poll);
          resolve(hit);
        } else if (Date.now() - t0 > ms) {
          clearInterval(poll);
          reject(new Error(`state not seen within ${ms} ms`));
        }
      }, 2);
    });
  }

  it("streams schema-valid states", async () => {
    await waitFor((s) => s.step > 2, 10000);
  }, 20000);

  it("observes a keyboard twist command at the bridge within 100 ms", async () => {
    await waitFor((s) => s.step > 0, 10000);
    const sent = Date.now();
    ws.send(JSON.stringify(setTargetTwist(0.31, 0, 0)));
    await waitFor((s) => s.command.vx === 0.31, 5000);
    // find the first echoing state's arrival bound: it resolved by now
    expect(Date.now() - sent).toBeLessThanOrEqual(100);
  }, 20000);

  it("direct-root teleop drags the grasped object", async () => {
    ws.send(JSON.stringify(teleop(true)));
    await waitFor((s) => s.mode === "teleop", 5000);
    const before = states[states.length - 1]!.object.x;
    const stepBefore = states[states.length - 1]!.step;
    ws.send(JSON.stringify(setTargetTwist(-0.25, 0, 0)));
    // two simulated seconds of backing away while holding the grasp
    await waitFor((s) => s.step > stepBefore + 40, 15000);
    const after = states[states.length - 1]!.object.x;
    expect(after).toBeLessThan(before - 0.1);
    ws.send(JSON.stringify(setTargetTwist(0, 0, 0)));
  }, 30000);
});
