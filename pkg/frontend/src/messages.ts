/** Bridge message schema: decoding of server state frames and validated
 * construction of client commands. The client never sends a message that
 * fails its schema. */
import { z } from "zod";

export const SCHEMA_VERSION = 1;

const point = z.tuple([z.number(), z.number()]);

const robotSchema = z.object({
  x: z.number(),
  y: z.number(),
  yaw: z.number(),
  vx: z.number(),
  vy: z.number(),
  omega: z.number(),
  arm_q: z.array(z.number()).length(3),
  arm_dq: z.array(z.number()).length(3),
  gripper_open: z.number(),
  ee_force: z.number(),
});

export const stateSchema = z.object({
  type: z.literal("state"),
  schema: z.literal(SCHEMA_VERSION),
  step: z.number().int().nonnegative(),
  t: z.number(),
  paused: z.boolean(),
  mode: z.enum(["policy", "teleop"]),
  robots: z.array(robotSchema).min(1),
  object: z.object({
    x: z.number(),
    y: z.number(),
    yaw: z.number(),
    vx: z.number(),
    vy: z.number(),
    omega: z.number(),
  }),
  robot_chain: z.array(point),
  demo_chain: z.array(point),
  command: z.object({ vx: z.number(), vy: z.number(), omega: z.number() }),
  reward: z.object({
    total: z.number(),
    r_imi: z.number(),
    err_c: z.number().nullable(),
  }),
  metrics: z.object({
    steps: z.number(),
    mean_tracking_error: z.number(),
    last_tracking_error: z.number(),
  }),
});

export const errorSchema = z.object({
  type: z.literal("error"),
  message: z.string(),
});

export type StateMessage = z.infer<typeof stateSchema>;
export type ErrorMessage = z.infer<typeof errorSchema>;
export type ServerMessage = StateMessage | ErrorMessage;

export class SchemaError extends Error {}

/** Decode one server frame; throws SchemaError on anything malformed. */
export function parseServerMessage(text: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new SchemaError(`not JSON: ${String(e)}`);
  }
  const asState = stateSchema.safeParse(raw);
  if (asState.success) return asState.data;
  const asError = errorSchema.safeParse(raw);
  if (asError.success) return asError.data;
  throw new SchemaError(asState.error.issues[0]?.message ?? "unknown frame");
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/** Per-axis command bounds mirrored from the simulator's action clamp. */
export const TWIST_LIMITS = { vx: 1.0, vy: 1.0, omega: 1.5 } as const;

const finite = z.number().finite();

export const commandSchema = z.discriminatedUnion("type", [
  z.object({
    type: z.literal("set_target_twist"),
    vx: finite,
    vy: finite,
    omega: finite,
  }),
  z.object({ type: z.literal("cookbook"), name: z.string().min(1) }),
  z.object({ type: z.literal("set_goal"), x: finite, y: finite, yaw: finite }),
  z.object({ type: z.literal("pause") }),
  z.object({ type: z.literal("resume") }),
  z.object({ type: z.literal("reset"), seed: z.number().int() }),
  z.object({ type: z.literal("switch_policy"), checkpoint: z.string().min(1) }),
  z.object({ type: z.literal("teleop"), enabled: z.boolean() }),
]);

export type CommandMessage = z.infer<typeof commandSchema>;

function clamp(v: number, lim: number): number {
  return Math.min(lim, Math.max(-lim, v));
}

export function setTargetTwist(vx: number, vy: number, omega: number): CommandMessage {
  return {
    type: "set_target_twist",
    vx: clamp(vx, TWIST_LIMITS.vx),
    vy: clamp(vy, TWIST_LIMITS.vy),
    omega: clamp(omega, TWIST_LIMITS.omega),
  };
}

export function cookbook(name: string): CommandMessage {
  return { type: "cookbook", name };
}

export function setGoal(x: number, y: number, yaw: number): CommandMessage {
  return { type: "set_goal", x, y, yaw };
}

export function teleop(enabled: boolean): CommandMessage {
  return { type: "teleop", enabled };
}

export function resetSession(seed: number): CommandMessage {
  return { type: "reset", seed };
}

/** Serialize a command, schema-validating it first. */
export function encodeCommand(cmd: CommandMessage): string {
  const checked = commandSchema.safeParse(cmd);
  if (!checked.success) {
    throw new SchemaError(checked.error.issues[0]?.message ?? "bad command");
  }
  return JSON.stringify(checked.data);
}
