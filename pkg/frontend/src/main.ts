/** Browser entry point: wires the connection, scene, keyboard steering,
 * cookbook buttons, goal placement, teleop switch, and telemetry charts. */
import { BridgeConnection } from "./connection.js";
import { BINDINGS, KeyboardSteering } from "./keyboard.js";
import {
  cookbook,
  resetSession,
  setGoal,
  setTargetTwist,
  teleop,
} from "./messages.js";
import { SceneModel, makeCamera, render, screenToWorld } from "./scene.js";
import { TelemetryPanel, drawSeries } from "./telemetry.js";

const COOKBOOK_NAMES = [
  "forward-slow",
  "forward-fast",
  "backward",
  "turn-left",
  "turn-right",
  "arc-left",
  "arc-right",
  "stop",
];

const SEND_INTERVAL_MS = 50; // match the 20 Hz control rate

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function start(): void {
  const canvas = el<HTMLCanvasElement>("scene");
  const charts = el<HTMLCanvasElement>("charts");
  const banner = el<HTMLDivElement>("banner");
  const readout = el<HTMLDivElement>("readout");
  const buttons = el<HTMLDivElement>("cookbook");
  const teleopBox = el<HTMLInputElement>("teleop");

  const cam = makeCamera(canvas.width, canvas.height);
  const scene = new SceneModel();
  const telemetry = new TelemetryPanel();
  const keys = new KeyboardSteering();

  const params = new URLSearchParams(window.location.search);
  const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
  const port = params.get("port") ?? "8770";
  const conn = new BridgeConnection(
    `ws://${host}:${port}/`,
    (url) => new WebSocket(url),
    {
      onState: (s) => {
        scene.update(s);
        telemetry.update(s);
      },
      onBanner: (text) => {
        banner.textContent = text ?? "";
        banner.style.display = text ? "block" : "none";
      },
      onServerError: (m) => console.warn("bridge error:", m),
      onSchemaError: (e) => console.error("schema error:", e.message),
    },
  );
  conn.connect();

  for (const name of COOKBOOK_NAMES) {
    const b = document.createElement("button");
    b.textContent = name;
    b.onclick = () => conn.send(cookbook(name));
    buttons.appendChild(b);
  }
  el<HTMLButtonElement>("reset").onclick = () => conn.send(resetSession(0));
  teleopBox.onchange = () => conn.send(teleop(teleopBox.checked));

  window.addEventListener("keydown", (ev) => {
    if (keys.keyDown(ev.code)) ev.preventDefault();
  });
  window.addEventListener("keyup", (ev) => keys.keyUp(ev.code));

  // steering loop: send the (possibly decaying) keyboard twist each tick
  let wasIdle = true;
  setInterval(() => {
    const idle = keys.idle();
    if (idle && wasIdle) return; // nothing held, already settled at zero
    const tw = keys.step(SEND_INTERVAL_MS / 1000);
    try {
      conn.send(setTargetTwist(tw.vx, tw.vy, tw.omega));
    } catch {
      /* not connected yet */
    }
    wasIdle = idle;
  }, SEND_INTERVAL_MS);

  // click to place a goal (yaw from a subsequent shift-click is out of scope;
  // goals keep the object's current heading)
  canvas.addEventListener("click", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const [x, y] = screenToWorld(cam, ev.clientX - rect.left, ev.clientY - rect.top);
    const yaw = conn.latest?.object.yaw ?? 0;
    scene.goal = { x, y, yaw };
    conn.send(setGoal(x, y, yaw));
  });

  const keyHelp = Object.entries(BINDINGS)
    .map(([code, tw]) => `${code.replace("Key", "")}: ${JSON.stringify(tw)}`)
    .join("  ");
  el<HTMLDivElement>("help").textContent = `keys - ${keyHelp}`;

  const ctx = canvas.getContext("2d")!;
  const cctx = charts.getContext("2d")!;
  const frame = () => {
    render(ctx, cam, scene.primitives(cam));
    cctx.clearRect(0, 0, charts.width, charts.height);
    const w = charts.width / 4 - 10;
    drawSeries(cctx, telemetry.rImi, 5, 5, w, 60, "#2e9e5b");
    drawSeries(cctx, telemetry.errC, w + 15, 5, w, 60, "#d94f30");
    drawSeries(cctx, telemetry.trackingError, 2 * w + 25, 5, w, 60, "#3178c6");
    drawSeries(cctx, telemetry.eeForce, 3 * w + 35, 5, w, 60, "#8858c8");
    const r = telemetry.readouts();
    readout.textContent = r
      ? `t=${r.t.toFixed(2)}s step=${r.step} r_imi=${r.r_imi.toFixed(3)} ` +
        `err_c=${r.err_c === null ? "-" : r.err_c.toFixed(3)} ` +
        `track_err=${r.tracking_error.toFixed(3)} ee_force=${r.ee_force.toFixed(1)}N`
      : "waiting for state...";
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

start();
