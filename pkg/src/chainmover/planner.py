"""Waypoint-reaching twist planner and the named command cookbook.

The planner is a two-phase state machine over the object pose: first drive the
object toward the goal position at a fixed forward speed while steering its
heading at the bearing error, then rotate in place onto the goal heading. The
phase transition is latched with hysteresis so phase-2 rotation cannot bounce
the planner back into phase 1.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownCommandError
from .geometry import Pose2, Twist2, rotate, wrap_angle

FORWARD_SPEED = 0.4         # m/s while position-reaching
YAW_RATE_CAP = 0.4          # rad/s in both phases
HYSTERESIS = 2.0            # re-enter phase 1 past HYSTERESIS * delta_xy


@dataclass(frozen=True)
class GoalSpec:
    x: float
    y: float
    yaw: float
    delta_xy: float = 0.1       # position threshold (m)
    delta_yaw: float = 0.1      # heading threshold (rad)

    def __post_init__(self) -> None:
        if self.delta_xy <= 0 or self.delta_yaw <= 0:
            raise ValueError("goal thresholds must be positive")

    def position_error(self, pose: Pose2) -> float:
        return math.hypot(self.x - pose.x, self.y - pose.y)

    def heading_error(self, pose: Pose2) -> float:
        return wrap_angle(self.yaw - pose.yaw)


@dataclass
class PlannerState:
    """Latched phase flag; phase 2 means the position goal has been reached."""
    aligning: bool = False


def heuristic_step(pose: Pose2, goal: GoalSpec,
                   state: PlannerState | None = None) -> Twist2 | None:
    """One planner decision: a body-frame object twist command, or None (done).

    Phase 1: forward at FORWARD_SPEED, yaw rate min(YAW_RATE_CAP, |bearing
    error|) toward the goal position. Phase 2: rotate in place onto the goal
    heading. The command is the desired object twist in its own frame.
    """
    state = state if state is not None else PlannerState()
    pos_err = goal.position_error(pose)
    if state.aligning and pos_err > HYSTERESIS * goal.delta_xy:
        state.aligning = False
    if not state.aligning and pos_err >= goal.delta_xy:
        bearing = math.atan2(goal.y - pose.y, goal.x - pose.x)
        err = wrap_angle(bearing - pose.yaw)
        w = math.copysign(min(YAW_RATE_CAP, abs(err)), err) if err else 0.0
        return Twist2(FORWARD_SPEED, 0.0, w)
    state.aligning = True
    head_err = goal.heading_error(pose)
    if abs(head_err) < goal.delta_yaw:
        return None
    w = math.copysign(min(YAW_RATE_CAP, abs(head_err)), head_err)
    return Twist2(0.0, 0.0, w)


@dataclass(frozen=True)
class PlannerRun:
    success: bool
    steps: int
    sim_time: float
    final_position_error: float
    final_heading_error: float
    obj_poses: tuple
    commands: tuple


@dataclass
class _KinBody:
    pose: Pose2


@dataclass
class _KinRobot:
    root: Pose2
    arm_q: tuple = (0.0, 0.0, 0.0)


@dataclass
class _KinConfig:
    control_dt: float = 0.05


@dataclass
class _KinWorld:
    obj: _KinBody
    robot: _KinRobot


class KinematicTwistEnv:
    """Idealized twist executor with the task-environment loop interface.

    The object follows the commanded target twist exactly each control step;
    the action is accepted (and shape-checked) but otherwise ignored. A rigid
    stand-in robot rides a fixed offset behind the object so scripted
    controllers that read the robot state keep working. This isolates the
    planning layer: any closed-loop planner failure on this environment is a
    planner bug, not an execution limit.
    """

    ACTION_DIM = 6
    ROOT_BACKOFF = 1.0          # robot root offset behind the object (m)

    def __init__(self, control_dt: float = 0.05):
        self.cfg = _KinConfig(control_dt)
        self.target = Twist2(0.0, 0.0, 0.0)
        self.ref_pose = Pose2(0.0, 0.0, 0.0)
        self.steps = 0
        self.world = _KinWorld(_KinBody(Pose2(0.0, 0.0, 0.0)),
                               _KinRobot(Pose2(-self.ROOT_BACKOFF, 0.0, 0.0)))

    def _obs(self) -> np.ndarray:
        p = self.world.obj.pose
        return np.array([self.target.vx, self.target.vy, self.target.omega,
                         p.x, p.y, p.yaw, 1.0])

    def reset(self, seed: int = 0,
              target: Twist2 | None = None) -> np.ndarray:
        self.target = target if target is not None else Twist2(0.0, 0.0, 0.0)
        self.steps = 0
        self.world.obj.pose = Pose2(0.0, 0.0, 0.0)
        self._place_robot()
        self.ref_pose = self.world.obj.pose
        return self._obs()

    def _place_robot(self) -> None:
        p = self.world.obj.pose
        bx, by = rotate(p.yaw, -self.ROOT_BACKOFF, 0.0)
        self.world.robot.root = Pose2(p.x + bx, p.y + by, p.yaw)

    def step(self, action) -> tuple[np.ndarray, float, bool, dict]:
        action = np.asarray(action, dtype=float)
        if action.shape != (self.ACTION_DIM,):
            raise ValueError(f"expected action of shape ({self.ACTION_DIM},)")
        p = self.world.obj.pose
        dt = self.cfg.control_dt
        vx, vy = rotate(p.yaw, self.target.vx, self.target.vy)
        self.world.obj.pose = Pose2(p.x + vx * dt, p.y + vy * dt,
                                    p.yaw + self.target.omega * dt)
        self._place_robot()
        self.ref_pose = self.world.obj.pose
        self.steps += 1
        return self._obs(), 0.0, False, {}


def run_planner(env, controller, goal: GoalSpec, seed: int = 0,
                max_steps: int = 2400, replan_every: int = 10) -> PlannerRun:
    """Close the loop: the planner re-decides every replan_every control steps
    (2 Hz over a 20 Hz controller) and feeds the twist to the controller as the
    environment's target command.

    env is a task environment (reset(seed, target)/step); controller maps
    (obs, env) -> action.
    """
    state = PlannerState()
    first = heuristic_step(Pose2(0, 0, 0), goal, PlannerState())
    obs = env.reset(seed, target=first or Twist2(0.0, 0.0, 0.0))
    poses = [env.world.obj.pose]
    commands = []
    done = False
    steps = 0
    for t in range(max_steps):
        if t % replan_every == 0:
            cmd = heuristic_step(env.world.obj.pose, goal, state)
            if cmd is None:
                done = True
                break
            env.target = cmd
            # Re-anchor the reference on the actual object so long runs do not
            # accumulate open-loop drift between replans.
            env.ref_pose = env.world.obj.pose
            commands.append(cmd)
        obs, _r, _d, info = env.step(controller(obs, env))
        steps = t + 1
        poses.append(env.world.obj.pose)
        if info.get("diverged"):
            break
    pose = env.world.obj.pose
    return PlannerRun(
        success=done,
        steps=steps,
        sim_time=steps * env.cfg.control_dt,
        final_position_error=goal.position_error(pose),
        final_heading_error=abs(goal.heading_error(pose)),
        obj_poses=tuple(poses),
        commands=tuple(commands),
    )


# --------------------------------------------------------------------------
# Cookbook
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CookbookEntry:
    name: str
    twist: Twist2
    duration: float         # seconds

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("cookbook entry duration must be positive")


DEFAULT_COOKBOOK = {
    "forward-slow": CookbookEntry("forward-slow", Twist2(0.2, 0.0, 0.0), 2.0),
    "forward-fast": CookbookEntry("forward-fast", Twist2(0.4, 0.0, 0.0), 2.0),
    "backward": CookbookEntry("backward", Twist2(-0.2, 0.0, 0.0), 2.0),
    "turn-left": CookbookEntry("turn-left", Twist2(0.0, 0.0, 0.3), 2.0),
    "turn-right": CookbookEntry("turn-right", Twist2(0.0, 0.0, -0.3), 2.0),
    "arc-left": CookbookEntry("arc-left", Twist2(0.3, 0.0, 0.2), 3.0),
    "arc-right": CookbookEntry("arc-right", Twist2(0.3, 0.0, -0.2), 3.0),
    "stop": CookbookEntry("stop", Twist2(0.0, 0.0, 0.0), 0.5),
}


def load_cookbook(path: str) -> dict[str, CookbookEntry]:
    """Cookbook file: one section per entry with vx/vy/omega/duration keys."""
    cp = configparser.ConfigParser()
    with open(path) as f:
        cp.read_file(f)
    book = {}
    for name in cp.sections():
        s = cp[name]
        book[name] = CookbookEntry(
            name=name,
            twist=Twist2(float(s.get("vx", 0.0)), float(s.get("vy", 0.0)),
                         float(s.get("omega", 0.0))),
            duration=float(s.get("duration", 2.0)),
        )
    return book


def save_cookbook(path: str, book: dict[str, CookbookEntry]) -> None:
    cp = configparser.ConfigParser()
    for name, e in book.items():
        cp[name] = {"vx": repr(e.twist.vx), "vy": repr(e.twist.vy),
                    "omega": repr(e.twist.omega), "duration": repr(e.duration)}
    with open(path, "w") as f:
        cp.write(f)


def cookbook_command(name: str, control_dt: float = 0.05,
                     book: dict[str, CookbookEntry] | None = None) -> list[Twist2]:
    """The entry's twist held for its duration, then one zero-twist step."""
    book = book if book is not None else DEFAULT_COOKBOOK
    if name not in book:
        raise UnknownCommandError(f"unknown cookbook entry {name!r}")
    e = book[name]
    n = max(1, int(round(e.duration / control_dt)))
    return [e.twist] * n + [Twist2(0.0, 0.0, 0.0)]


def cookbook_sequence(names, control_dt: float = 0.05,
                      book: dict[str, CookbookEntry] | None = None) -> list[Twist2]:
    """Concatenated entry streams; each ends with its own zero-twist gap step."""
    out: list[Twist2] = []
    for name in names:
        out.extend(cookbook_command(name, control_dt, book))
    return out
