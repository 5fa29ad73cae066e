/** Keyboard steering: held keys accumulate a target twist, released axes
 * decay linearly to exactly zero well inside half a second. */
import { TWIST_LIMITS } from "./messages.js";

export interface Twist {
  vx: number;
  vy: number;
  omega: number;
}

/** Key bindings (documented on-screen): W/S forward/back, Q/E strafe,
 * A/D turn left/right. */
export const BINDINGS: Record<string, Partial<Twist>> = {
  KeyW: { vx: 0.4 },
  KeyS: { vx: -0.4 },
  KeyQ: { vy: 0.1 },
  KeyE: { vy: -0.1 },
  KeyA: { omega: 0.4 },
  KeyD: { omega: -0.4 },
};

/** Seconds for a fully deflected axis to decay back to zero. */
export const DECAY_SECONDS = 0.3;

export class KeyboardSteering {
  private down = new Set<string>();
  private current: Twist = { vx: 0, vy: 0, omega: 0 };

  keyDown(code: string): boolean {
    if (!(code in BINDINGS)) return false;
    this.down.add(code);
    return true;
  }

  keyUp(code: string): void {
    this.down.delete(code);
  }

  /** The twist the held keys ask for. */
  target(): Twist {
    const t: Twist = { vx: 0, vy: 0, omega: 0 };
    for (const code of this.down) {
      const b = BINDINGS[code];
      if (!b) continue;
      t.vx += b.vx ?? 0;
      t.vy += b.vy ?? 0;
      t.omega += b.omega ?? 0;
    }
    t.vx = Math.min(TWIST_LIMITS.vx, Math.max(-TWIST_LIMITS.vx, t.vx));
    t.vy = Math.min(TWIST_LIMITS.vy, Math.max(-TWIST_LIMITS.vy, t.vy));
    t.omega = Math.min(TWIST_LIMITS.omega, Math.max(-TWIST_LIMITS.omega, t.omega));
    return t;
  }

  /** Advance by dt seconds toward the target and return the twist to send.
   * Held axes snap to the target; released axes ramp linearly to zero. */
  step(dt: number): Twist {
    const want = this.target();
    const next = (cur: number, tgt: number, lim: number): number => {
      if (tgt !== 0) return tgt;
      const rate = lim / DECAY_SECONDS;
      if (Math.abs(cur) <= rate * dt) return 0;
      return cur - Math.sign(cur) * rate * dt;
    };
    this.current = {
      vx: next(this.current.vx, want.vx, TWIST_LIMITS.vx),
      vy: next(this.current.vy, want.vy, TWIST_LIMITS.vy),
      omega: next(this.current.omega, want.omega, TWIST_LIMITS.omega),
    };
    return { ...this.current };
  }

  idle(): boolean {
    const c = this.current;
    return this.down.size === 0 && c.vx === 0 && c.vy === 0 && c.omega === 0;
  }
}
