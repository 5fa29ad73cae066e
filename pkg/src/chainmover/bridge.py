"""Live session server: streams world/chain/telemetry state over WebSocket at
the control rate and accepts steering commands.

Message schema (version 1, JSON text records):

State (server -> client, one per control step):
  {"type": "state", "schema": 1, "step": int, "t": float, "paused": bool,
   "mode": "policy"|"teleop",
   "robots": [{"x","y","yaw","vx","vy","omega","arm_q","arm_dq",
               "gripper_open","ee_force"}],
   "object": {"x","y","yaw","vx","vy","omega"},
   "robot_chain": [[x, y], ...],     # world-frame node overlay, [] off contact
   "demo_chain": [[x, y], ...],      # matched demo keypoints, re-anchored
   "command": {"vx","vy","omega"},
   "reward": {"total","r_imi","err_c"},
   "metrics": {"steps","mean_tracking_error","last_tracking_error"}}

Commands (client -> server), all objects with a "type" field:
  set_target_twist(vx, vy, omega)   continuous; latest before a step wins
  cookbook(name)                    queue a named command segment
  set_goal(x, y, yaw)               engage the waypoint planner
  pause / resume
  reset(seed)                       discrete; re-randomizes the episode
  switch_policy(checkpoint)         discrete; swaps the acting policy
  teleop(enabled)                   root-drive mode, bypassing the policy

Errors are answered with {"type": "error", "message": ...}; the session
continues. Sessions can be recorded to a newline-delimited log and replayed
bit-for-bit.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
import queue
import socket
import threading
import time
from collections import deque
from dataclasses import replace as dc_replace
from typing import Optional

from . import ws
from .baselines import MethodId
from .demos import DemoIndex, load_demos
from .errors import LogVersionError, UnknownCommandError
from .evaluation import Controller, controller_from_checkpoint, perfect_twist_controller
from .geometry import Twist2
from .planner import GoalSpec, PlannerState, heuristic_step
from .rl import MoverTaskEnv
from .sim import ACTION_HIGH, ACTION_LOW, EnvConfig, arm_points

SCHEMA_VERSION = 1
PLANNER_PERIOD = 10         # control steps between planner decisions (2 Hz)

COMMAND_TYPES = ("set_target_twist", "cookbook", "set_goal", "pause", "resume",
                 "reset", "switch_policy", "teleop")


def _clamp_twist(vx: float, vy: float, omega: float) -> Twist2:
    return Twist2(
        min(max(float(vx), ACTION_LOW[0]), ACTION_HIGH[0]),
        min(max(float(vy), ACTION_LOW[1]), ACTION_HIGH[1]),
        min(max(float(omega), ACTION_LOW[2]), ACTION_HIGH[2]),
    )


def dumps_message(msg: dict) -> str:
    """Canonical serialization; replay compares these byte-for-byte."""
    return json.dumps(msg, sort_keys=True, separators=(",", ":"))


class SimSession:
    """Owns one simulation and applies steering commands between steps.

    Single-threaded by contract: apply_commands() and step() are called from
    one thread (the server's sim loop, or the replay loop).
    """

    def __init__(self, env_cfg: EnvConfig, index: DemoIndex, seed: int = 0,
                 controller: str = "oracle", demo_dir: Optional[str] = None,
                 record_path: Optional[str] = None):
        self.env_cfg = env_cfg
        self.index = index
        self.seed = seed
        self.controller_spec = controller
        self.demo_dir = demo_dir
        self.env = MoverTaskEnv(dc_replace(env_cfg, episode_len=10 ** 9),
                                index, MethodId.CHAIN, term_tracking_error=None)
        self.controller = self._resolve_controller(controller)
        self.mode = "policy"
        self.paused = False
        self.step_count = 0
        self.goal: Optional[GoalSpec] = None
        self.goal_state = PlannerState()
        self.cookbook_queue: deque[Twist2] = deque()
        self.teleop_twist = Twist2(0.0, 0.0, 0.0)
        self.last_reward = {"total": 0.0, "r_imi": 0.0, "err_c": None}
        self.last_tracking_error = 0.0
        self._tracking_sum = 0.0
        self._record = None
        if record_path:
            self._record = open(record_path, "w")
            self._record.write(dumps_message(self._header()) + "\n")
            self._record.flush()
        self.obs = self.env.reset(seed, target=Twist2(0.0, 0.0, 0.0))

    @staticmethod
    def _resolve_controller(spec: str) -> Controller:
        if spec == "oracle":
            return perfect_twist_controller()
        return controller_from_checkpoint(spec)

    def _header(self) -> dict:
        return {
            "type": "header",
            "schema": SCHEMA_VERSION,
            "seed": self.seed,
            "controller": self.controller_spec,
            "demo_dir": self.demo_dir,
            "env_cfg": dataclasses.asdict(self.env_cfg),
        }

    # --- commands ---

    def apply_command(self, msg: dict) -> Optional[dict]:
        """Apply one command; returns an error reply dict or None on success."""
        try:
            self._apply(msg)
        except (UnknownCommandError, KeyError, TypeError, ValueError, OSError) as e:
            return {"type": "error", "schema": SCHEMA_VERSION, "message": str(e)}
        if self._record is not None:
            self._record.write(dumps_message(
                {"type": "command", "step": self.step_count, "msg": msg}) + "\n")
        return None

    def _apply(self, msg: dict) -> None:
        kind = msg.get("type")
        if kind == "set_target_twist":
            tw = _clamp_twist(msg["vx"], msg["vy"], msg["omega"])
            if self.mode == "teleop":
                self.teleop_twist = tw
            else:
                self.goal = None
                self.cookbook_queue.clear()
                self.env.target = tw
        elif kind == "cookbook":
            from .planner import cookbook_command
            self.goal = None
            self.cookbook_queue.extend(
                cookbook_command(msg["name"], self.env_cfg.control_dt))
        elif kind == "set_goal":
            self.goal = GoalSpec(float(msg["x"]), float(msg["y"]), float(msg["yaw"]))
            self.goal_state = PlannerState()
            self.cookbook_queue.clear()
        elif kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
        elif kind == "reset":
            self.seed = int(msg.get("seed", self.seed))
            self.obs = self.env.reset(self.seed, target=Twist2(0.0, 0.0, 0.0))
            self.goal = None
            self.cookbook_queue.clear()
            self.teleop_twist = Twist2(0.0, 0.0, 0.0)
            self._tracking_sum = 0.0
            self.last_tracking_error = 0.0
        elif kind == "switch_policy":
            self.controller_spec = msg["checkpoint"]
            self.controller = self._resolve_controller(self.controller_spec)
        elif kind == "teleop":
            enabled = bool(msg.get("enabled", True))
            self.mode = "teleop" if enabled else "policy"
            if enabled:
                self.teleop_twist = Twist2(0.0, 0.0, 0.0)
        else:
            raise UnknownCommandError(f"unknown command type {kind!r}")

    # --- stepping ---

    def step(self) -> str:
        """Advance one control step and return the serialized StateMessage."""
        env = self.env
        if self.cookbook_queue:
            env.target = self.cookbook_queue.popleft()
        elif self.goal is not None and self.step_count % PLANNER_PERIOD == 0:
            cmd = heuristic_step(env.world.obj.pose, self.goal, self.goal_state)
            if cmd is None:
                self.goal = None
                env.target = Twist2(0.0, 0.0, 0.0)
            else:
                env.target = cmd
                env.ref_pose = env.world.obj.pose
        if self.mode == "teleop":
            tw = self.teleop_twist
            q = env.world.robot.arm_q
            action = [tw.vx, tw.vy, tw.omega, q[0], q[1], q[2]]
        else:
            action = self.controller(self.obs, env)
        self.obs, reward, _done, info = env.step(action)
        self.step_count += 1
        self.last_reward = {
            "total": float(reward),
            "r_imi": float(info.get("r_imi", 0.0) or 0.0),
            "err_c": info.get("err_c"),
        }
        self.last_tracking_error = float(info.get("tracking_error", 0.0))
        self._tracking_sum += self.last_tracking_error
        text = dumps_message(self.state_message())
        if self._record is not None:
            self._record.write(text + "\n")
            self._record.flush()
        return text

    def state_message(self) -> dict:
        env = self.env
        world = env.world
        robots = []
        for r in world.robots:
            robots.append({
                "x": r.root.x, "y": r.root.y, "yaw": r.root.yaw,
                "vx": r.root_twist.vx, "vy": r.root_twist.vy,
                "omega": r.root_twist.omega,
                "arm_q": list(r.arm_q), "arm_dq": list(r.arm_dq),
                "gripper_open": r.gripper_open, "ee_force": r.ee_force,
            })
        o = world.obj
        robot_chain: list[list[float]] = []
        if world.robot.ee_force > 0.0:
            r = world.robot
            j1, j2, _j3, ee = arm_points(r.root, r.arm_q)
            robot_chain = [[o.pose.x, o.pose.y], list(ee), list(j2), list(j1),
                           [r.root.x, r.root.y]]
        kp = env.reference_frame().keypoints
        demo_chain = [list(p) for p in kp.ordered()]
        n = max(self.step_count, 1)
        return {
            "type": "state",
            "schema": SCHEMA_VERSION,
            "step": self.step_count,
            "t": round(world.time, 9),
            "paused": self.paused,
            "mode": self.mode,
            "robots": robots,
            "object": {"x": o.pose.x, "y": o.pose.y, "yaw": o.pose.yaw,
                       "vx": o.twist.vx, "vy": o.twist.vy, "omega": o.twist.omega},
            "robot_chain": robot_chain,
            "demo_chain": demo_chain,
            "command": {"vx": env.target.vx, "vy": env.target.vy,
                        "omega": env.target.omega},
            "reward": self.last_reward,
            "metrics": {"steps": self.step_count,
                        "mean_tracking_error": self._tracking_sum / n,
                        "last_tracking_error": self.last_tracking_error},
        }

    def close(self) -> None:
        if self._record is not None:
            self._record.close()
            self._record = None


def run_headless(session: SimSession, script: dict, n_steps: int) -> list[str]:
    """Step a session without a server. script maps step index -> list of
    command dicts applied before that step. Returns the state message texts."""
    out = []
    for t in range(n_steps):
        for msg in script.get(t, ()):
            err = session.apply_command(msg)
            if err is not None:
                raise ValueError(err["message"])
        if not session.paused:
            out.append(session.step())
    return out


# --------------------------------------------------------------------------
# Record / replay
# --------------------------------------------------------------------------

def replay_log(path: str, index: Optional[DemoIndex] = None) -> list[str]:
    """Re-run a recorded session and return the regenerated state texts.

    The log's own state lines are the expected values; callers compare."""
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise ValueError("empty session log")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise ValueError(f"corrupt session log header: {e}") from None
    if header.get("type") != "header":
        raise ValueError("session log must start with a header record")
    if header.get("schema") != SCHEMA_VERSION:
        raise LogVersionError(
            f"log schema {header.get('schema')} != supported {SCHEMA_VERSION}")
    if index is None:
        if not header.get("demo_dir"):
            raise ValueError("log has no demo_dir; pass a DemoIndex")
        index = DemoIndex(load_demos(header["demo_dir"]))
    env_cfg = EnvConfig(**header["env_cfg"])
    session = SimSession(env_cfg, index, seed=header["seed"],
                         controller=header["controller"])
    out = []
    n_states = 0
    for raw in lines[1:]:
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError:
            raise ValueError("truncated or corrupt session log record") from None
        if rec["type"] == "command":
            err = session.apply_command(rec["msg"])
            if err is not None:
                raise ValueError(f"replayed command failed: {err['message']}")
        elif rec["type"] == "state":
            out.append(session.step())
            n_states += 1
        else:
            raise ValueError(f"unknown log record type {rec['type']!r}")
    return out


def recorded_states(path: str) -> list[str]:
    """The state lines exactly as recorded (for byte comparison)."""
    with open(path) as f:
        lines = f.read().splitlines()
    out = []
    for raw in lines[1:]:
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError:
            raise ValueError("truncated or corrupt session log record") from None
        if rec.get("type") == "state":
            out.append(raw)
    return out


# --------------------------------------------------------------------------
# Server
# --------------------------------------------------------------------------

class BridgeServer:
    """WebSocket front end around one SimSession.

    One thread owns the simulation; per-client reader threads feed a command
    queue drained once per control step (latest set_target_twist wins; discrete
    commands apply in arrival order). The first client is the interactive one;
    later clients are read-only observers.
    """

    def __init__(self, session: SimSession, host: str = "127.0.0.1",
                 port: int = 0, pace: float = 1.0):
        self.session = session
        self.host = host
        self.port = port
        self.pace = pace
        self._commands: queue.Queue = queue.Queue()
        self._clients: list[socket.socket] = []
        self._interactive: Optional[socket.socket] = None
        self._lock = threading.Lock()
        self._running = False
        self._listener: Optional[socket.socket] = None
        self._threads: list[threading.Thread] = []

    def start(self) -> None:
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((self.host, self.port))
        self._listener.listen(8)
        self.port = self._listener.getsockname()[1]
        self._running = True
        for fn in (self._accept_loop, self._sim_loop):
            t = threading.Thread(target=fn, daemon=True)
            t.start()
            self._threads.append(t)

    def stop(self) -> None:
        self._running = False
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._lock:
            clients = list(self._clients)
        for c in clients:
            try:
                c.close()
            except OSError:
                pass
        for t in self._threads:
            t.join(timeout=2.0)
        self.session.close()

    # --- internals ---

    def _accept_loop(self) -> None:
        while self._running:
            try:
                conn, _addr = self._listener.accept()
            except OSError:
                return
            try:
                ws.server_handshake(conn)
            except (ValueError, ws.WsClosed, OSError):
                conn.close()
                continue
            with self._lock:
                self._clients.append(conn)
                if self._interactive is None:
                    self._interactive = conn
            t = threading.Thread(target=self._reader_loop, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _reader_loop(self, conn: socket.socket) -> None:
        while self._running:
            try:
                text = ws.recv_text(conn)
            except (ws.WsClosed, OSError, ValueError):
                self._drop_client(conn)
                return
            reply = None
            try:
                msg = json.loads(text)
                if not isinstance(msg, dict) or msg.get("type") not in COMMAND_TYPES:
                    reply = {"type": "error", "schema": SCHEMA_VERSION,
                             "message": f"unknown command type {text[:80]!r}"}
            except json.JSONDecodeError as e:
                reply = {"type": "error", "schema": SCHEMA_VERSION,
                         "message": f"malformed message: {e}"}
            if reply is None and conn is not self._interactive:
                reply = {"type": "error", "schema": SCHEMA_VERSION,
                         "message": "read-only observer connection"}
            if reply is not None:
                self._send(conn, dumps_message(reply))
                continue
            self._commands.put((conn, msg))

    def _drop_client(self, conn: socket.socket) -> None:
        with self._lock:
            if conn in self._clients:
                self._clients.remove(conn)
            # Losing the steering client pauses the simulation.
            if conn is self._interactive:
                self._interactive = None
                self.session.paused = True
        try:
            conn.close()
        except OSError:
            pass

    def _send(self, conn: socket.socket, text: str) -> None:
        try:
            ws.send_text(conn, text)
        except OSError:
            self._drop_client(conn)

    def _broadcast(self, text: str) -> None:
        with self._lock:
            clients = list(self._clients)
        for c in clients:
            self._send(c, text)

    def _sim_loop(self) -> None:
        dt = self.session.env_cfg.control_dt
        next_t = time.monotonic()
        while self._running:
            replies = []
            while True:
                try:
                    conn, msg = self._commands.get_nowait()
                except queue.Empty:
                    break
                err = self.session.apply_command(msg)
                if err is not None:
                    replies.append((conn, dumps_message(err)))
            for conn, text in replies:
                self._send(conn, text)
            if not self.session.paused:
                self._broadcast(self.session.step())
            if self.pace > 0:
                next_t += dt / self.pace
                delay = next_t - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                else:
                    next_t = time.monotonic()
            else:
                if self.session.paused:
                    time.sleep(0.001)


class BridgeClient:
    """Blocking loopback client (tests and scripts)."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        ws.client_handshake(self.sock, host, port)

    def send(self, msg: dict) -> None:
        ws.send_text(self.sock, dumps_message(msg), mask=True)

    def recv_text(self) -> str:
        return ws.recv_text(self.sock, reply_mask=True)

    def recv(self) -> dict:
        return json.loads(self.recv_text())

    def recv_state(self) -> dict:
        while True:
            msg = self.recv()
            if msg.get("type") == "state":
                return msg

    def close(self) -> None:
        try:
            ws.send_close(self.sock, mask=True)
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass
