import { describe, expect, it } from "vitest";
import {
  SchemaError,
  TWIST_LIMITS,
  commandSchema,
  cookbook,
  encodeCommand,
  parseServerMessage,
  setGoal,
  setTargetTwist,
  teleop,
} from "../src/messages.js";

const VALID_STATE = {
  type: "state",
  schema: 1,
  step: 3,
  t: 0.15,
  paused: false,
  mode: "policy",
  robots: [
    {
      x: 0,
      y: 0,
      yaw: 0,
      vx: 0,
      vy: 0,
      omega: 0,
      arm_q: [0, 0, 0],
      arm_dq: [0, 0, 0],
      gripper_open: 0,
      ee_force: 1.5,
    },
  ],
  object: { x: 1.2, y: 0, yaw: 0, vx: 0, vy: 0, omega: 0 },
  robot_chain: [
    [1.2, 0],
    [0.9, 0],
  ],
  demo_chain: [],
  command: { vx: 0, vy: 0, omega: 0 },
  reward: { total: 0.5, r_imi: 0.5, err_c: 0.7 },
  metrics: { steps: 3, mean_tracking_error: 0.01, last_tracking_error: 0.02 },
};

describe("state decoding", () => {
  it("accepts a well-formed state frame", () => {
    const msg = parseServerMessage(JSON.stringify(VALID_STATE));
    expect(msg.type).toBe("state");
    if (msg.type === "state") {
      expect(msg.robot_chain).toEqual([
        [1.2, 0],
        [0.9, 0],
      ]);
    }
  });

  it("accepts a null err_c (no contact)", () => {
    const s = { ...VALID_STATE, reward: { total: 0, r_imi: 0, err_c: null } };
    const msg = parseServerMessage(JSON.stringify(s));
    expect(msg.type).toBe("state");
  });

  it("accepts error frames", () => {
    const msg = parseServerMessage('{"type": "error", "message": "nope"}');
    expect(msg).toEqual({ type: "error", message: "nope" });
  });

  it("rejects non-JSON, unknown types, and missing fields", () => {
    expect(() => parseServerMessage("{not json")).toThrow(SchemaError);
    expect(() => parseServerMessage('{"type": "mystery"}')).toThrow(SchemaError);
    const broken: Record<string, unknown> = { ...VALID_STATE };
    delete broken.object;
    expect(() => parseServerMessage(JSON.stringify(broken))).toThrow(SchemaError);
  });

  it("rejects a wrong schema version", () => {
    const s = { ...VALID_STATE, schema: 2 };
    expect(() => parseServerMessage(JSON.stringify(s))).toThrow(SchemaError);
  });
});

describe("command construction", () => {
  it("clamps twists to the simulator bounds", () => {
    const cmd = setTargetTwist(9, -9, 9);
    expect(cmd).toEqual({
      type: "set_target_twist",
      vx: TWIST_LIMITS.vx,
      vy: -TWIST_LIMITS.vy,
      omega: TWIST_LIMITS.omega,
    });
  });

  it("serializes only schema-valid commands", () => {
    expect(JSON.parse(encodeCommand(cookbook("turn-left")))).toEqual({
      type: "cookbook",
      name: "turn-left",
    });
    expect(JSON.parse(encodeCommand(setGoal(3, 2, 0.5)))).toEqual({
      type: "set_goal",
      x: 3,
      y: 2,
      yaw: 0.5,
    });
    expect(JSON.parse(encodeCommand(teleop(true)))).toEqual({
      type: "teleop",
      enabled: true,
    });
  });

  it("refuses malformed commands before they reach the wire", () => {
    expect(() =>
      encodeCommand({ type: "set_target_twist", vx: NaN, vy: 0, omega: 0 }),
    ).toThrow(SchemaError);
    expect(() => encodeCommand({ type: "cookbook", name: "" } as never)).toThrow(
      SchemaError,
    );
    expect(commandSchema.safeParse({ type: "warp_drive" }).success).toBe(false);
  });
});
