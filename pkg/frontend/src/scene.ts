/** Top-down scene model: a single affine world-to-screen transform and a
 * pure list of draw primitives derived from the latest state message only.
 * No client-side physics. */
import type { StateMessage } from "./messages.js";

export interface Camera {
  /** pixels per meter */
  scale: number;
  /** world point mapped to the canvas center */
  cx: number;
  cy: number;
  width: number;
  height: number;
}

export function makeCamera(width: number, height: number, viewRadius = 4.0): Camera {
  return { scale: Math.min(width, height) / (2 * viewRadius), cx: 0.75, cy: 0, width, height };
}

export function worldToScreen(cam: Camera, x: number, y: number): [number, number] {
  return [
    cam.width / 2 + (x - cam.cx) * cam.scale,
    cam.height / 2 - (y - cam.cy) * cam.scale, // +y up in world, down on canvas
  ];
}

export function screenToWorld(cam: Camera, px: number, py: number): [number, number] {
  return [
    cam.cx + (px - cam.width / 2) / cam.scale,
    cam.cy - (py - cam.height / 2) / cam.scale,
  ];
}

export interface OverlayToggles {
  robotChain: boolean;
  demoChain: boolean;
  goalMarker: boolean;
  forceReadout: boolean;
}

export type Primitive =
  | { kind: "circle"; x: number; y: number; r: number; color: string; fill: boolean }
  | { kind: "polyline"; points: [number, number][]; color: string; width: number }
  | { kind: "text"; x: number; y: number; text: string; color: string };

export interface Goal {
  x: number;
  y: number;
  yaw: number;
}

const OBJECT_RADIUS = 0.25;
const ROBOT_RADIUS = 0.18;

export class SceneModel {
  state: StateMessage | null = null;
  goal: Goal | null = null;
  toggles: OverlayToggles = {
    robotChain: true,
    demoChain: true,
    goalMarker: true,
    forceReadout: true,
  };

  update(state: StateMessage): void {
    this.state = state; // latest-state slot: render never sees stale frames
  }

  /** Chain overlay node positions, verbatim from the state message. */
  chainNodes(which: "robot_chain" | "demo_chain"): [number, number][] {
    return this.state ? this.state[which] : [];
  }

  primitives(cam: Camera): Primitive[] {
    const s = this.state;
    if (!s) return [];
    const out: Primitive[] = [];
    const o = s.object;
    out.push({
      kind: "circle",
      ...xy(cam, o.x, o.y),
      r: OBJECT_RADIUS * cam.scale,
      color: "#8858c8",
      fill: true,
    });
    out.push(heading(cam, o.x, o.y, o.yaw, OBJECT_RADIUS, "#2d1b4e"));
    for (const r of s.robots) {
      out.push({
        kind: "circle",
        ...xy(cam, r.x, r.y),
        r: ROBOT_RADIUS * cam.scale,
        color: "#3178c6",
        fill: true,
      });
      out.push(heading(cam, r.x, r.y, r.yaw, ROBOT_RADIUS, "#0b2942"));
      if (this.toggles.forceReadout) {
        const [px, py] = worldToScreen(cam, r.x, r.y - 0.3);
        out.push({
          kind: "text",
          x: px,
          y: py,
          text: `${r.ee_force.toFixed(1)} N`,
          color: "#333",
        });
      }
    }
    if (this.toggles.robotChain && s.robot_chain.length > 1) {
      out.push(chainLine(cam, s.robot_chain, "#d94f30"));
    }
    if (this.toggles.demoChain && s.demo_chain.length > 1) {
      out.push(chainLine(cam, s.demo_chain, "#2e9e5b"));
    }
    if (this.toggles.goalMarker && this.goal) {
      out.push({
        kind: "circle",
        ...xy(cam, this.goal.x, this.goal.y),
        r: 0.15 * cam.scale,
        color: "#c8a200",
        fill: false,
      });
      out.push(heading(cam, this.goal.x, this.goal.y, this.goal.yaw, 0.15, "#c8a200"));
    }
    return out;
  }
}

function xy(cam: Camera, x: number, y: number): { x: number; y: number } {
  const [px, py] = worldToScreen(cam, x, y);
  return { x: px, y: py };
}

function heading(
  cam: Camera,
  x: number,
  y: number,
  yaw: number,
  len: number,
  color: string,
): Primitive {
  return {
    kind: "polyline",
    points: [
      worldToScreen(cam, x, y),
      worldToScreen(cam, x + len * Math.cos(yaw), y + len * Math.sin(yaw)),
    ],
    color,
    width: 2,
  };
}

function chainLine(cam: Camera, nodes: [number, number][], color: string): Primitive {
  return {
    kind: "polyline",
    points: nodes.map(([x, y]) => worldToScreen(cam, x, y)),
    color,
    width: 2,
  };
}

/** Draw the primitive list onto a canvas 2D context. */
export function render(
  ctx: CanvasRenderingContext2D,
  cam: Camera,
  prims: Primitive[],
): void {
  ctx.clearRect(0, 0, cam.width, cam.height);
  for (const p of prims) {
    if (p.kind === "circle") {
      ctx.beginPath();
      ctx.arc(p.x, p.y, p.r, 0, 2 * Math.PI);
      if (p.fill) {
        ctx.fillStyle = p.color;
        ctx.fill();
      } else {
        ctx.strokeStyle = p.color;
        ctx.stroke();
      }
    } else if (p.kind === "polyline") {
      ctx.beginPath();
      ctx.strokeStyle = p.color;
      ctx.lineWidth = p.width;
      p.points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
      ctx.stroke();
      ctx.lineWidth = 1;
    } else {
      ctx.fillStyle = p.color;
      ctx.fillText(p.text, p.x, p.y);
    }
  }
}
