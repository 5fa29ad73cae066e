/** Rolling telemetry: bounded series of reward and tracking signals whose
 * numeric readouts always equal the latest state message exactly. */
import type { StateMessage } from "./messages.js";

export class RollingSeries {
  private buf: number[] = [];

  constructor(readonly capacity = 400) {
    if (capacity < 1) throw new Error("capacity must be >= 1");
  }

  push(v: number): void {
    this.buf.push(v);
    if (this.buf.length > this.capacity) this.buf.shift();
  }

  values(): readonly number[] {
    return this.buf;
  }

  last(): number | null {
    return this.buf.length ? this.buf[this.buf.length - 1]! : null;
  }
}

export interface Readouts {
  r_imi: number;
  err_c: number | null;
  tracking_error: number;
  ee_force: number;
  t: number;
  step: number;
}

export class TelemetryPanel {
  readonly rImi = new RollingSeries();
  readonly errC = new RollingSeries();
  readonly trackingError = new RollingSeries();
  readonly eeForce = new RollingSeries();
  private latest: StateMessage | null = null;

  update(state: StateMessage): void {
    this.latest = state;
    this.rImi.push(state.reward.r_imi);
    if (state.reward.err_c !== null) this.errC.push(state.reward.err_c);
    this.trackingError.push(state.metrics.last_tracking_error);
    this.eeForce.push(state.robots[0]!.ee_force);
  }

  readouts(): Readouts | null {
    const s = this.latest;
    if (!s) return null;
    return {
      r_imi: s.reward.r_imi,
      err_c: s.reward.err_c,
      tracking_error: s.metrics.last_tracking_error,
      ee_force: s.robots[0]!.ee_force,
      t: s.t,
      step: s.step,
    };
  }
}

/** Draw one series as a sparkline filling the given canvas box. */
export function drawSeries(
  ctx: CanvasRenderingContext2D,
  series: RollingSeries,
  x: number,
  y: number,
  w: number,
  h: number,
  color: string,
): void {
  const vals = series.values();
  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(x, y, w, h);
  if (vals.length < 2) return;
  let lo = Math.min(...vals);
  let hi = Math.max(...vals);
  if (hi - lo < 1e-9) {
    hi = lo + 1;
  }
  ctx.beginPath();
  ctx.strokeStyle = color;
  vals.forEach((v, i) => {
    const px = x + (i / (vals.length - 1)) * w;
    const py = y + h - ((v - lo) / (hi - lo)) * h;
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
}
