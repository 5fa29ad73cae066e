"""Planar rigid-body world: velocity-commanded base + 3-link arm, breakable grasp,
Coulomb ground friction, domain randomization.

The object slides on the ground with translational friction -mu_t*m*g*v_hat and a
yaw friction torque -mu_r*mu_t*m*g*sign(omega) (mu_r is an effective lever arm in
meters). The grasp is a spring-damper point coupling between the arm end-effector
and an anchor fixed in the object frame; it severs the substep its force exceeds
breakaway_force. Integration is semi-implicit Euler at physics_dt with several
substeps per control step.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import NoContactError, SimDivergedError
from .geometry import Pose2, Twist2, rotate, wrap_angle

GRAVITY = 9.81

# Robot geometry (meters / radians).
ARM_LINKS = (0.35, 0.30, 0.15)
ARM_BASE_OFFSET = 0.15          # arm shoulder joint sits this far ahead of the root
ARM_LIMIT = 2.6                 # symmetric joint limit per arm joint
ARM_WN = 12.0                   # natural frequency of the critically damped servo
ROBOT_BODY_RADIUS = 0.30        # used for the robot-object overlap check

# Action bounds: (vx, vy, omega, q1*, q2*, q3*) per robot.
ACTION_LOW = (-1.0, -1.0, -1.5, -ARM_LIMIT, -ARM_LIMIT, -ARM_LIMIT)
ACTION_HIGH = (1.0, 1.0, 1.5, ARM_LIMIT, ARM_LIMIT, ARM_LIMIT)
ACTION_DIM = 6

ATTACH_TOL = 0.05               # max end-effector distance from the object boundary
STICK_EPS = 1e-3                # below this speed friction sticks (velocity zeroed)

FOOTPRINT_RADIUS = {"chair": 0.25, "table": 0.45, "rack": 0.12}
NOMINAL_MASS = {"chair": 10.0, "table": 25.0, "rack": 8.0}

DEFAULT_ARM_Q = (0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class RobotState:
    root: Pose2
    root_twist: Twist2
    arm_q: tuple[float, float, float]
    arm_dq: tuple[float, float, float]
    gripper_open: float
    ee_force: float

    def validate(self) -> None:
        for q in self.arm_q:
            if not -ARM_LIMIT <= q <= ARM_LIMIT:
                raise ValueError(f"arm joint {q} outside limits")
        if self.ee_force < 0:
            raise ValueError("ee_force must be >= 0")


@dataclass(frozen=True, slots=True)
class ObjectState:
    pose: Pose2
    twist: Twist2
    mass: float
    inertia_z: float
    mu_t: float
    mu_r: float
    footprint_radius: float

    def validate(self) -> None:
        if self.mass <= 0 or self.inertia_z <= 0:
            raise ValueError("mass and inertia must be positive")
        if self.mu_t < 0 or self.mu_r < 0:
            raise ValueError("friction parameters must be non-negative")


@dataclass(frozen=True, slots=True)
class GraspCoupling:
    attached: bool
    anchor_object_frame: tuple[float, float]
    stiffness: float = 2000.0
    damping: float = 80.0
    breakaway_force: float = 120.0
    tangential_mu: float = 0.6


@dataclass(frozen=True, slots=True)
class WorldState:
    robots: tuple[RobotState, ...]
    obj: ObjectState
    couplings: tuple[Optional[GraspCoupling], ...]
    time: float = 0.0
    break_counts: tuple[int, ...] = (0,)

    @property
    def robot(self) -> RobotState:
        return self.robots[0]

    @property
    def coupling(self) -> Optional[GraspCoupling]:
        return self.couplings[0]

    def attached(self, i: int = 0) -> bool:
        c = self.couplings[i]
        return c is not None and c.attached


@dataclass
class EnvConfig:
    physics_dt: float = 0.005
    control_dt: float = 0.05
    episode_len: int = 160
    object_category: str = "chair"
    # Randomization ranges.
    obj_xy_jitter: float = 0.1
    obj_yaw_jitter: float = 0.2
    mass_scale_lo: float = 0.5
    mass_scale_hi: float = 2.0
    mu_t_lo: float = 0.2
    mu_t_hi: float = 0.8
    root_offset: float = 0.05
    rng_seed: int = 0
    # Grasp coupling parameters.
    grasp_stiffness: float = 2000.0
    grasp_damping: float = 80.0
    breakaway_force: float = 120.0
    grasp_tangential_mu: float = 0.6
    # Object friction lever arm.
    mu_r: float = 0.15
    auto_attach: bool = True
    # Episode start: 0 begins attached at the boundary; > 0 begins detached with
    # the end-effector that far short of it (the policy must close the gap).
    start_gap: float = 0.0
    # Fraction of training episodes whose target twist is drawn from a broad
    # drive-command grammar (straight lines, in-place turns, arcs) instead of
    # the demo twist distribution. Demo twists rarely include in-place turns,
    # so policies meant to execute waypoint-following commands need this.
    command_mix: float = 0.0
    # If > 0, the target twist is re-sampled every command_hold control steps
    # (the reference keeps integrating from where it is), so the policy trains
    # on command switches from arbitrary mid-motion states — the regime a
    # waypoint follower puts it in. 0 keeps one command per episode.
    command_hold: int = 0
    # Overrides (None -> per-category default).
    nominal_mass: Optional[float] = None
    footprint_radius: Optional[float] = None

    def validate(self) -> None:
        n = self.control_dt / self.physics_dt
        if abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise ValueError("control_dt must be an integer multiple of physics_dt")
        if self.mass_scale_hi < self.mass_scale_lo or self.mu_t_hi < self.mu_t_lo:
            raise ValueError("randomization ranges must be nonempty")
        if self.object_category not in FOOTPRINT_RADIUS:
            raise ValueError(f"unknown object category {self.object_category!r}")
        if self.episode_len < 1:
            raise ValueError("episode_len must be positive")
        if self.start_gap < 0 or self.mu_r < 0:
            raise ValueError("start_gap and mu_r must be nonnegative")
        if not 0.0 <= self.command_mix <= 1.0:
            raise ValueError("command_mix must be in [0, 1]")
        if self.command_hold < 0:
            raise ValueError("command_hold must be nonnegative")

    @property
    def substeps(self) -> int:
        return int(round(self.control_dt / self.physics_dt))

    def category_mass(self) -> float:
        return self.nominal_mass if self.nominal_mass is not None else NOMINAL_MASS[self.object_category]

    def category_footprint(self) -> float:
        return (self.footprint_radius if self.footprint_radius is not None
                else FOOTPRINT_RADIUS[self.object_category])

    def nominal_object_x(self) -> float:
        """Object center distance at which the default straight arm reaches the boundary."""
        return ARM_BASE_OFFSET + sum(ARM_LINKS) + self.category_footprint()

    # --- plain-text key-value config file (configparser sections) ---

    def to_file(self, path: str) -> None:
        cp = configparser.ConfigParser()
        cp["env"] = {
            "physics_dt": repr(self.physics_dt),
            "control_dt": repr(self.control_dt),
            "episode_len": str(self.episode_len),
            "object_category": self.object_category,
            "rng_seed": str(self.rng_seed),
            "auto_attach": str(self.auto_attach),
            "mu_r": repr(self.mu_r),
            "start_gap": repr(self.start_gap),
        }
        cp["randomization"] = {
            "obj_xy_jitter": repr(self.obj_xy_jitter),
            "obj_yaw_jitter": repr(self.obj_yaw_jitter),
            "mass_scale_lo": repr(self.mass_scale_lo),
            "mass_scale_hi": repr(self.mass_scale_hi),
            "mu_t_lo": repr(self.mu_t_lo),
            "mu_t_hi": repr(self.mu_t_hi),
            "root_offset": repr(self.root_offset),
        }
        cp["grasp"] = {
            "stiffness": repr(self.grasp_stiffness),
            "damping": repr(self.grasp_damping),
            "breakaway_force": repr(self.breakaway_force),
            "tangential_mu": repr(self.grasp_tangential_mu),
        }
        with open(path, "w") as f:
            cp.write(f)

    @classmethod
    def from_file(cls, path: str) -> "EnvConfig":
        cp = configparser.ConfigParser()
        with open(path) as f:
            cp.read_file(f)
        env = cp["env"]
        rnd = cp["randomization"] if cp.has_section("randomization") else {}
        grp = cp["grasp"] if cp.has_section("grasp") else {}
        cfg = cls(
            physics_dt=float(env.get("physics_dt", 0.005)),
            control_dt=float(env.get("control_dt", 0.05)),
            episode_len=int(env.get("episode_len", 160)),
            object_category=env.get("object_category", "chair"),
            rng_seed=int(env.get("rng_seed", 0)),
            auto_attach=env.get("auto_attach", "True").lower() in ("1", "true", "yes"),
            mu_r=float(env.get("mu_r", 0.15)),
            start_gap=float(env.get("start_gap", 0.0)),
            obj_xy_jitter=float(rnd.get("obj_xy_jitter", 0.1)),
            obj_yaw_jitter=float(rnd.get("obj_yaw_jitter", 0.2)),
            mass_scale_lo=float(rnd.get("mass_scale_lo", 0.5)),
            mass_scale_hi=float(rnd.get("mass_scale_hi", 2.0)),
            mu_t_lo=float(rnd.get("mu_t_lo", 0.2)),
            mu_t_hi=float(rnd.get("mu_t_hi", 0.8)),
            root_offset=float(rnd.get("root_offset", 0.05)),
            grasp_stiffness=float(grp.get("stiffness", 2000.0)),
            grasp_damping=float(grp.get("damping", 80.0)),
            breakaway_force=float(grp.get("breakaway_force", 120.0)),
            grasp_tangential_mu=float(grp.get("tangential_mu", 0.6)),
        )
        cfg.validate()
        return cfg


# --------------------------------------------------------------------------
# Forward kinematics
# --------------------------------------------------------------------------

def arm_points(root: Pose2, q: Sequence[float]):
    """Joint and end-effector world positions: (j1, j2, j3, ee).

    j1 is the arm base (ahead of the root), j2/j3 the elbow-like joints, ee the
    gripper point.
    """
    return _arm_points(root.x, root.y, root.yaw, q[0], q[1], q[2])


def _arm_points(rx: float, ry: float, ryaw: float, q1: float, q2: float, q3: float):
    c, s = math.cos(ryaw), math.sin(ryaw)
    j1x = rx + c * ARM_BASE_OFFSET
    j1y = ry + s * ARM_BASE_OFFSET
    a1 = ryaw + q1
    j2x = j1x + ARM_LINKS[0] * math.cos(a1)
    j2y = j1y + ARM_LINKS[0] * math.sin(a1)
    a2 = a1 + q2
    j3x = j2x + ARM_LINKS[1] * math.cos(a2)
    j3y = j2y + ARM_LINKS[1] * math.sin(a2)
    a3 = a2 + q3
    eex = j3x + ARM_LINKS[2] * math.cos(a3)
    eey = j3y + ARM_LINKS[2] * math.sin(a3)
    return ((j1x, j1y), (j2x, j2y), (j3x, j3y), (eex, eey))


def ee_position(root: Pose2, q: Sequence[float]) -> tuple[float, float]:
    return arm_points(root, q)[3]


def boundary_distance(world: WorldState, point: tuple[float, float]) -> float:
    """Distance from a world point to the object's circular footprint boundary."""
    o = world.obj.pose
    return abs(math.hypot(point[0] - o.x, point[1] - o.y) - world.obj.footprint_radius)


# --------------------------------------------------------------------------
# Construction / reset
# --------------------------------------------------------------------------

def _rng_for(cfg: EnvConfig, seed: int) -> np.random.Generator:
    mask = (1 << 63) - 1
    return np.random.default_rng([cfg.rng_seed & mask, seed & mask])


def _make_object(cfg: EnvConfig, rng: np.random.Generator) -> ObjectState:
    r_f = cfg.category_footprint()
    mass = cfg.category_mass() * rng.uniform(cfg.mass_scale_lo, cfg.mass_scale_hi)
    mu_t = rng.uniform(cfg.mu_t_lo, cfg.mu_t_hi)
    x = cfg.nominal_object_x() + rng.uniform(-cfg.obj_xy_jitter, cfg.obj_xy_jitter)
    y = rng.uniform(-cfg.obj_xy_jitter, cfg.obj_xy_jitter)
    yaw = rng.uniform(-cfg.obj_yaw_jitter, cfg.obj_yaw_jitter)
    return ObjectState(
        pose=Pose2(x, y, yaw),
        twist=Twist2(0.0, 0.0, 0.0),
        mass=mass,
        inertia_z=0.5 * mass * r_f * r_f,
        mu_t=mu_t,
        mu_r=cfg.mu_r,
        footprint_radius=r_f,
    )


def _make_robot(x: float, y: float, yaw: float) -> RobotState:
    return RobotState(
        root=Pose2(x, y, yaw),
        root_twist=Twist2(0.0, 0.0, 0.0),
        arm_q=DEFAULT_ARM_Q,
        arm_dq=(0.0, 0.0, 0.0),
        gripper_open=0.6,
        ee_force=0.0,
    )


def reset(cfg: EnvConfig, seed: int) -> WorldState:
    """Fresh single-robot world: robot near the origin, randomized object."""
    cfg.validate()
    rng = _rng_for(cfg, seed)
    rx = rng.uniform(-cfg.root_offset, cfg.root_offset)
    ry = rng.uniform(-cfg.root_offset, cfg.root_offset)
    robot = _make_robot(rx, ry, 0.0)
    obj = _make_object(cfg, rng)
    return WorldState(robots=(robot,), obj=obj, couplings=(None,), time=0.0,
                      break_counts=(0,))


def make_two_robot_world(cfg: EnvConfig, seed: int = 0) -> WorldState:
    """Two robots on opposite sides of one object, both grippers at the boundary."""
    cfg.validate()
    rng = _rng_for(cfg, seed)
    obj = _make_object(cfg, rng)
    reach = ARM_BASE_OFFSET + sum(ARM_LINKS)
    d = reach + obj.footprint_radius
    o = obj.pose
    ax, ay = rotate(o.yaw, -d, 0.0)
    bx, by = rotate(o.yaw, d, 0.0)
    robot_a = _make_robot(o.x + ax, o.y + ay, o.yaw)
    robot_b = _make_robot(o.x + bx, o.y + by, wrap_angle(o.yaw + math.pi))
    return WorldState(robots=(robot_a, robot_b), obj=obj, couplings=(None, None),
                      time=0.0, break_counts=(0, 0))


def attach_grasp(world: WorldState, ee_point: tuple[float, float],
                 robot_index: int = 0,
                 stiffness: Optional[float] = None,
                 damping: Optional[float] = None,
                 breakaway_force: Optional[float] = None,
                 tangential_mu: Optional[float] = None) -> WorldState:
    """Attach the grasp coupling with the anchor at the contact point.

    The anchor is the given end-effector point expressed in the object frame, so
    the spring stretch (and force) is zero at the instant of attachment.
    """
    if boundary_distance(world, ee_point) > ATTACH_TOL:
        raise NoContactError(
            f"end-effector {boundary_distance(world, ee_point):.3f} m from boundary")
    anchor = world.obj.pose.to_local(ee_point[0], ee_point[1])
    coupling = GraspCoupling(
        attached=True,
        anchor_object_frame=anchor,
        stiffness=2000.0 if stiffness is None else stiffness,
        damping=80.0 if damping is None else damping,
        breakaway_force=120.0 if breakaway_force is None else breakaway_force,
        tangential_mu=0.6 if tangential_mu is None else tangential_mu,
    )
    couplings = list(world.couplings)
    couplings[robot_index] = coupling
    robots = list(world.robots)
    robots[robot_index] = replace(robots[robot_index], ee_force=0.0)
    return replace(world, couplings=tuple(couplings), robots=tuple(robots))


def coupling_from_config(cfg: EnvConfig, anchor: tuple[float, float]) -> GraspCoupling:
    return GraspCoupling(
        attached=True,
        anchor_object_frame=anchor,
        stiffness=cfg.grasp_stiffness,
        damping=cfg.grasp_damping,
        breakaway_force=cfg.breakaway_force,
        tangential_mu=cfg.grasp_tangential_mu,
    )


# --------------------------------------------------------------------------
# Stepping
# --------------------------------------------------------------------------

def clamp_action(action: Sequence[float]) -> tuple[float, ...]:
    out = []
    for i, a in enumerate(action):
        if not math.isfinite(a):
            raise ValueError("action components must be finite")
        k = i % ACTION_DIM
        out.append(min(max(a, ACTION_LOW[k]), ACTION_HIGH[k]))
    return tuple(out)


def friction_substep(vx: float, vy: float, omega: float, mu_t: float, mu_r: float,
                     mass: float, inertia: float, dt: float):
    """One Coulomb friction substep on an object twist. Reaches exact rest."""
    speed = math.hypot(vx, vy)
    dv = mu_t * GRAVITY * dt
    if speed <= dv or speed < STICK_EPS:
        vx = vy = 0.0
    else:
        s = 1.0 - dv / speed
        vx *= s
        vy *= s
    dw = mu_r * mu_t * GRAVITY * mass / inertia * dt
    aw = abs(omega)
    if aw <= dw or aw < STICK_EPS:
        omega = 0.0
    else:
        omega = math.copysign(aw - dw, omega)
    return vx, vy, omega


def drive_object(obj: ObjectState, force: tuple[float, float], torque: float,
                 dt: float, substeps: int) -> ObjectState:
    """Integrate the free object under an external wrench plus ground friction.

    Used by the demonstration generator (the scripted human applies the wrench)
    and shares the exact integrator of step().
    """
    ox, oy, oyaw = obj.pose.x, obj.pose.y, obj.pose.yaw
    vx, vy, om = obj.twist.vx, obj.twist.vy, obj.twist.omega
    h = dt / substeps
    for _ in range(substeps):
        vx += force[0] / obj.mass * h
        vy += force[1] / obj.mass * h
        om += torque / obj.inertia_z * h
        vx, vy, om = friction_substep(vx, vy, om, obj.mu_t, obj.mu_r,
                                      obj.mass, obj.inertia_z, h)
        ox += vx * h
        oy += vy * h
        oyaw = wrap_angle(oyaw + om * h)
    return replace(obj, pose=Pose2(ox, oy, oyaw), twist=Twist2(vx, vy, om))


def step(world: WorldState, action: Sequence[float], cfg: EnvConfig) -> WorldState:
    """Advance the world by one control step (cfg.substeps physics substeps)."""
    n_robots = len(world.robots)
    acts = clamp_action(action)
    if len(acts) != ACTION_DIM * n_robots:
        raise ValueError(f"expected {ACTION_DIM * n_robots} action dims, got {len(acts)}")
    dt = cfg.physics_dt
    n_sub = cfg.substeps

    ox, oy, oyaw = world.obj.pose.x, world.obj.pose.y, world.obj.pose.yaw
    ovx, ovy, oom = world.obj.twist.vx, world.obj.twist.vy, world.obj.twist.omega
    m, inz = world.obj.mass, world.obj.inertia_z
    mu_t, mu_r = world.obj.mu_t, world.obj.mu_r

    # Mutable per-robot scratch state.
    rs = []
    for i, r in enumerate(world.robots):
        a = acts[ACTION_DIM * i: ACTION_DIM * (i + 1)]
        rs.append({
            "x": r.root.x, "y": r.root.y, "yaw": r.root.yaw,
            "q": list(r.arm_q), "dq": list(r.arm_dq),
            "cmd": a[:3], "qt": a[3:],
            "coupling": world.couplings[i],
            "ee_force": 0.0,
            "gripper": r.gripper_open,
            "breaks": world.break_counts[i],
        })

    # Opportunistic attachment at the control-step boundary.
    if cfg.auto_attach:
        for st in rs:
            c = st["coupling"]
            if c is None or not c.attached:
                ee = _arm_points(st["x"], st["y"], st["yaw"], *st["q"])[3]
                d = abs(math.hypot(ee[0] - ox, ee[1] - oy) - world.obj.footprint_radius)
                if d <= ATTACH_TOL:
                    lx, ly = rotate(-oyaw, ee[0] - ox, ee[1] - oy)
                    st["coupling"] = coupling_from_config(cfg, (lx, ly))

    for _ in range(n_sub):
        fx_tot = fy_tot = tau_tot = 0.0
        for st in rs:
            ee0 = _arm_points(st["x"], st["y"], st["yaw"], *st["q"])[3]
            # Kinematic root integration of the commanded twist.
            cvx, cvy, com = st["cmd"]
            wvx, wvy = rotate(st["yaw"], cvx, cvy)
            st["x"] += wvx * dt
            st["y"] += wvy * dt
            st["yaw"] = wrap_angle(st["yaw"] + com * dt)
            # Critically damped joint servo toward the commanded targets.
            q, dq, qt = st["q"], st["dq"], st["qt"]
            for j in range(3):
                ddq = ARM_WN * ARM_WN * (qt[j] - q[j]) - 2.0 * ARM_WN * dq[j]
                dq[j] += ddq * dt
                q[j] += dq[j] * dt
                if q[j] > ARM_LIMIT:
                    q[j], dq[j] = ARM_LIMIT, 0.0
                elif q[j] < -ARM_LIMIT:
                    q[j], dq[j] = -ARM_LIMIT, 0.0
            ee1 = _arm_points(st["x"], st["y"], st["yaw"], *st["q"])[3]

            c = st["coupling"]
            if c is not None and c.attached:
                aox, aoy = c.anchor_object_frame
                awx, awy = rotate(oyaw, aox, aoy)
                awx += ox
                awy += oy
                vax = ovx - oom * (awy - oy)
                vay = ovy + oom * (awx - ox)
                vex = (ee1[0] - ee0[0]) / dt
                vey = (ee1[1] - ee0[1]) / dt
                dx_ = ee1[0] - awx
                dy_ = ee1[1] - awy
                fx = c.stiffness * dx_ + c.damping * (vex - vax)
                fy = c.stiffness * dy_ + c.damping * (vey - vay)
                stretch = math.hypot(dx_, dy_)
                if stretch > 1e-9:
                    ux, uy = dx_ / stretch, dy_ / stretch
                    frad = fx * ux + fy * uy
                    ftx, fty = fx - frad * ux, fy - frad * uy
                    ft = math.hypot(ftx, fty)
                    lim = c.tangential_mu * abs(frad)
                    if ft > lim and ft > 1e-12:
                        s = lim / ft
                        fx = frad * ux + ftx * s
                        fy = frad * uy + fty * s
                fmag = math.hypot(fx, fy)
                if fmag > c.breakaway_force or stretch * c.stiffness > c.breakaway_force:
                    st["coupling"] = replace(c, attached=False)
                    st["ee_force"] = 0.0
                    st["breaks"] += 1
                else:
                    st["ee_force"] = fmag
                    fx_tot += fx
                    fy_tot += fy
                    tau_tot += (awx - ox) * fy - (awy - oy) * fx
            else:
                st["ee_force"] = 0.0

        # Object: applied wrench, then Coulomb friction, then position update.
        ovx += fx_tot / m * dt
        ovy += fy_tot / m * dt
        oom += tau_tot / inz * dt
        ovx, ovy, oom = friction_substep(ovx, ovy, oom, mu_t, mu_r, m, inz, dt)
        ox += ovx * dt
        oy += ovy * dt
        oyaw = wrap_angle(oyaw + oom * dt)

    vals = [ox, oy, oyaw, ovx, ovy, oom]
    for st in rs:
        vals += [st["x"], st["y"], st["yaw"], st["ee_force"]] + st["q"] + st["dq"]
    if not all(math.isfinite(v) for v in vals):
        raise SimDivergedError("non-finite state after integration")

    robots = []
    couplings = []
    breaks = []
    for i, st in enumerate(rs):
        cvx, cvy, com = st["cmd"]
        wvx, wvy = rotate(st["yaw"], cvx, cvy)
        robots.append(RobotState(
            root=Pose2(st["x"], st["y"], st["yaw"]),
            root_twist=Twist2(wvx, wvy, com),
            arm_q=tuple(st["q"]),
            arm_dq=tuple(st["dq"]),
            gripper_open=st["gripper"],
            ee_force=st["ee_force"],
        ))
        couplings.append(st["coupling"])
        breaks.append(st["breaks"])
    obj = replace(world.obj, pose=Pose2(ox, oy, oyaw), twist=Twist2(ovx, ovy, oom))
    return WorldState(robots=tuple(robots), obj=obj, couplings=tuple(couplings),
                      time=world.time + cfg.control_dt, break_counts=tuple(breaks))


def robot_object_overlap(world: WorldState, robot_index: int = 0) -> bool:
    """Proxy collision check between the robot body disc and the object footprint."""
    r = world.robots[robot_index].root
    o = world.obj.pose
    return math.hypot(r.x - o.x, r.y - o.y) < ROBOT_BODY_RADIUS + world.obj.footprint_radius
