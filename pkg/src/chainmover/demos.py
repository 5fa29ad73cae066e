"""Demonstration trajectories: file schema, loader, synthetic generator, and the
twist-space nearest-frame index.

The synthetic generator scripts a planar "human" (two-link arm, deliberately
different limb proportions than the robot) dragging the object along smooth
spline paths, integrating the object with the simulator's own ground-friction
dynamics. It stands in for a mocap corpus; the loader accepts any file in the
documented schema.

File schema (version 1), one trajectory per file, whitespace-delimited decimal
text:

    icdemo 1 <category> <dt> <dominant_arm> <comma-separated-arms> <source_tag>
    t hx hy hyaw ox oy oyaw vx vy omega [per arm: c sx sy ex ey wx wy]

where (hx, hy, hyaw) is the human root pose, (ox, oy, oyaw) the object pose,
(vx, vy, omega) the object twist, and per arm: contact flag then shoulder,
elbow, wrist xy.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .chain import (InteractionChain, KeypointSet, aggregate_two_arm,
                    chain_from_human)
from .errors import DemoKinematicsError, DemoParseError, EmptyDemoIndexError
from .geometry import Pose2, Twist2, norm2, rotate, wrap_angle
from .sim import (ARM_LINKS, FOOTPRINT_RADIUS, GRAVITY, NOMINAL_MASS, ObjectState,
                  drive_object)

SCHEMA_VERSION = 1
DEMO_DT = 0.05
MIN_FRAMES = 40
TWIST_RTOL = 0.10

# Scripted demonstrator morphology: intentionally different link ratios than the
# robot arm so the cross-embodiment premise is exercised, not faked.
HUMAN_LINKS = (0.30, 0.28)
SHOULDER_OFFSET = 0.10

CATEGORY_COUNTS = {"chair": 50, "table": 30, "rack": 40}


def morphology_gap() -> float:
    """Relative gap between human and robot proximal/distal link ratios (> 0)."""
    human = HUMAN_LINKS[0] / HUMAN_LINKS[1]
    robot = ARM_LINKS[0] / ARM_LINKS[1]
    return abs(human - robot) / robot


@dataclass(frozen=True, slots=True)
class DemoFrame:
    t: float
    human_root: Pose2
    keypoints: dict            # arm name -> KeypointSet
    object_pose: Pose2
    object_twist: Twist2
    contact: dict              # arm name -> bool
    dominant_arm: str          # left | right | both


@dataclass(frozen=True, slots=True)
class DemoTrajectory:
    object_category: str
    frames: tuple[DemoFrame, ...]
    source_tag: str

    @property
    def arms(self) -> tuple[str, ...]:
        return tuple(self.frames[0].keypoints.keys())


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def save_demo(traj: DemoTrajectory, path: str) -> None:
    arms = list(traj.frames[0].keypoints.keys())
    with open(path, "w") as f:
        f.write(f"icdemo {SCHEMA_VERSION} {traj.object_category} {DEMO_DT!r} "
                f"{traj.frames[0].dominant_arm} {','.join(arms)} {traj.source_tag}\n")
        for fr in traj.frames:
            parts = [
                f"{fr.t!r}",
                f"{fr.human_root.x!r} {fr.human_root.y!r} {fr.human_root.yaw!r}",
                f"{fr.object_pose.x!r} {fr.object_pose.y!r} {fr.object_pose.yaw!r}",
                f"{fr.object_twist.vx!r} {fr.object_twist.vy!r} {fr.object_twist.omega!r}",
            ]
            for arm in arms:
                kp = fr.keypoints[arm]
                parts.append(f"{int(fr.contact[arm])} "
                             f"{kp.shoulder[0]!r} {kp.shoulder[1]!r} "
                             f"{kp.elbow[0]!r} {kp.elbow[1]!r} "
                             f"{kp.wrist[0]!r} {kp.wrist[1]!r}")
            f.write(" ".join(parts) + "\n")


def _parse_frame(path: str, idx: int, tokens: list[str], arms: list[str],
                 dominant_arm: str) -> DemoFrame:
    need = 10 + 7 * len(arms)
    if len(tokens) != need:
        raise DemoParseError(path, idx, "line", f"expected {need} fields, got {len(tokens)}")
    try:
        vals = [float(x) for x in tokens]
    except ValueError as e:
        raise DemoParseError(path, idx, "number", str(e))
    t = vals[0]
    human_root = Pose2(vals[1], vals[2], vals[3])
    obj_pose = Pose2(vals[4], vals[5], vals[6])
    obj_twist = Twist2(vals[7], vals[8], vals[9])
    keypoints = {}
    contact = {}
    off = 10
    for arm in arms:
        c = vals[off] != 0.0
        sx, sy, ex, ey, wx, wy = vals[off + 1: off + 7]
        off += 7
        keypoints[arm] = KeypointSet(
            agent_root=(human_root.x, human_root.y),
            shoulder=(sx, sy),
            elbow=(ex, ey),
            wrist=(wx, wy),
            object_root=(obj_pose.x, obj_pose.y),
        )
        contact[arm] = c
    return DemoFrame(t=t, human_root=human_root, keypoints=keypoints,
                     object_pose=obj_pose, object_twist=obj_twist,
                     contact=contact, dominant_arm=dominant_arm)


def load_demo(path: str) -> DemoTrajectory:
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 7 or header[0] != "icdemo":
            raise DemoParseError(path, 0, "header", "malformed header line")
        if int(header[1]) != SCHEMA_VERSION:
            raise DemoParseError(path, 0, "version", f"unsupported version {header[1]}")
        category = header[2]
        dt = float(header[3])
        dominant_arm = header[4]
        arms = header[5].split(",")
        source_tag = header[6]
        frames = []
        for i, line in enumerate(f):
            if not line.strip():
                continue
            frames.append(_parse_frame(path, i, line.split(), arms, dominant_arm))
    if len(frames) < MIN_FRAMES:
        raise DemoParseError(path, len(frames), "frames",
                             f"trajectory shorter than {MIN_FRAMES} frames")
    for i in range(1, len(frames)):
        if frames[i].t <= frames[i - 1].t:
            raise DemoParseError(path, i, "t", "timestamps must be strictly increasing")
        if abs((frames[i].t - frames[i - 1].t) - dt) > 1e-6:
            raise DemoParseError(path, i, "t", f"frame spacing must be {dt}")
    _check_twists(path, frames, dt)
    return DemoTrajectory(object_category=category, frames=tuple(frames),
                          source_tag=source_tag)


def _check_twists(path: str, frames: list[DemoFrame], dt: float) -> None:
    """Stored twist must match the forward finite difference of the poses."""
    for i in range(len(frames) - 1):
        a, b = frames[i].object_pose, frames[i + 1].object_pose
        tw = frames[i].object_twist
        fd = (
            (b.x - a.x) / dt,
            (b.y - a.y) / dt,
            wrap_angle(b.yaw - a.yaw) / dt,
        )
        stored = (tw.vx, tw.vy, tw.omega)
        mag = max(norm2(fd[0], fd[1]), abs(fd[2]))
        err = max(abs(fd[k] - stored[k]) for k in range(3))
        if mag > 0.05 and err > TWIST_RTOL * max(mag, 1e-9):
            raise DemoKinematicsError(
                f"{path}: frame {i}: twist disagrees with pose finite difference "
                f"({err:.4f} vs tolerance {TWIST_RTOL * mag:.4f})")


def load_demos(path: str) -> list[DemoTrajectory]:
    """Load every *.demo file under a directory, grouped by object category."""
    files = sorted(fn for fn in os.listdir(path) if fn.endswith(".demo"))
    trajs = [load_demo(os.path.join(path, fn)) for fn in files]
    trajs.sort(key=lambda tr: tr.object_category)
    return trajs


def save_demos(trajs: list[DemoTrajectory], out_dir: str, seed: int) -> None:
    """Write one file per trajectory plus a generator manifest."""
    os.makedirs(out_dir, exist_ok=True)
    by_cat: dict[str, int] = {}
    names = []
    for tr in trajs:
        i = by_cat.get(tr.object_category, 0)
        by_cat[tr.object_category] = i + 1
        name = f"{tr.object_category}_{tr.source_tag}_{i:03d}.demo"
        save_demo(tr, os.path.join(out_dir, name))
        names.append(name)
    with open(os.path.join(out_dir, "manifest.cfg"), "w") as f:
        f.write("[manifest]\n")
        f.write(f"seed = {seed}\n")
        for cat, n in sorted(by_cat.items()):
            f.write(f"count_{cat} = {n}\n")
        f.write("files =\n")
        for name in names:
            f.write(f"    {name}\n")


# --------------------------------------------------------------------------
# Synthetic generator
# --------------------------------------------------------------------------

def _two_link_elbow(shoulder, wrist, bend: float):
    """Elbow position of the two-link human arm; bend selects the solution side."""
    l1, l2 = HUMAN_LINKS
    dx, dy = wrist[0] - shoulder[0], wrist[1] - shoulder[1]
    d = norm2(dx, dy)
    d = min(max(d, abs(l1 - l2) + 1e-6), l1 + l2 - 1e-6)
    a = (l1 * l1 - l2 * l2 + d * d) / (2 * d)
    h = math.sqrt(max(l1 * l1 - a * a, 0.0))
    ux, uy = dx / d, dy / d
    return (shoulder[0] + a * ux - bend * h * uy,
            shoulder[1] + a * uy + bend * h * ux)


def _standoff(footprint: float) -> float:
    """Boundary-to-human-root distance keeping the root 0.6-0.9 m from the center."""
    return min(max(0.75 - footprint, 0.35), 0.55)


def _arm_keypoints(obj_pose: Pose2, footprint: float, phi: float, bend: float,
                   lateral: float = 0.0):
    """Keypoints for one arm grasping the boundary at object-frame angle phi."""
    wx, wy = obj_pose.to_world(footprint * math.cos(phi), footprint * math.sin(phi))
    cx, cy = obj_pose.x, obj_pose.y
    rlen = norm2(wx - cx, wy - cy)
    ox, oy = (wx - cx) / rlen, (wy - cy) / rlen     # outward radial direction
    d = _standoff(footprint)
    rootx, rooty = wx + ox * d - oy * lateral, wy + oy * d + ox * lateral
    root_yaw = math.atan2(cy - rooty, cx - rootx)
    shoulder = (rootx + math.cos(root_yaw) * SHOULDER_OFFSET,
                rooty + math.sin(root_yaw) * SHOULDER_OFFSET)
    elbow = _two_link_elbow(shoulder, (wx, wy), bend)
    return Pose2(rootx, rooty, root_yaw), shoulder, elbow, (wx, wy)


def generate_demo(category: str, seed: int, index: int, arms: str = "single") -> DemoTrajectory:
    """One scripted drag trajectory. arms: single | both-sym | both-asym."""
    rng = np.random.default_rng([seed & (1 << 63) - 1, index, {"single": 0,
                                 "both-sym": 1, "both-asym": 2}[arms]])
    footprint = FOOTPRINT_RADIUS[category]
    mass = NOMINAL_MASS[category] * rng.uniform(0.7, 1.3)
    mu_t = rng.uniform(0.3, 0.6)
    obj = ObjectState(
        pose=Pose2(0.0, 0.0, 0.0), twist=Twist2(0.0, 0.0, 0.0),
        mass=mass, inertia_z=0.5 * mass * footprint ** 2,
        mu_t=mu_t, mu_r=0.15, footprint_radius=footprint,
    )

    # Spline path through 3-5 waypoints with gently turning headings.
    n_wp = int(rng.integers(3, 6))
    pts = [(0.0, 0.0)]
    heading = rng.uniform(-math.pi, math.pi)
    for _ in range(n_wp - 1):
        heading += rng.uniform(-0.8, 0.8)
        dist = rng.uniform(0.8, 1.5)
        pts.append((pts[-1][0] + dist * math.cos(heading),
                    pts[-1][1] + dist * math.sin(heading)))
    pts_arr = np.asarray(pts)
    chord = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts_arr, axis=0).T))])
    sx = CubicSpline(chord, pts_arr[:, 0])
    sy = CubicSpline(chord, pts_arr[:, 1])
    total = float(chord[-1])
    speed = rng.uniform(0.1, 0.5)
    duration = max(total / speed, (MIN_FRAMES + 5) * DEMO_DT)
    n_frames = int(math.ceil(duration / DEMO_DT))
    speed = total / (n_frames * DEMO_DT)

    # Object starts aligned with the initial path tangent.
    t0x, t0y = float(sx(0.0, 1)), float(sy(0.0, 1))
    obj = ObjectState(pose=Pose2(0.0, 0.0, math.atan2(t0y, t0x)), twist=obj.twist,
                      mass=obj.mass, inertia_z=obj.inertia_z, mu_t=obj.mu_t,
                      mu_r=obj.mu_r, footprint_radius=obj.footprint_radius)

    phi = math.pi + rng.uniform(-0.5, 0.5)
    bend = 1.0 if rng.uniform() < 0.5 else -1.0
    if arms == "both-sym":
        arm_spec = {"left": (phi + 0.5, 0.12), "right": (phi - 0.5, -0.12)}
    elif arms == "both-asym":
        # The arms play different roles: the left keeps a steady grasp while
        # the right hand keeps re-positioning along the boundary with the
        # elbow bent the other way, so the two per-arm chains disagree and
        # their node-wise average wanders relative to the actual motion.
        arm_spec = {"left": (phi + rng.uniform(0.2, 0.4), 0.18),
                    "right": (phi - rng.uniform(0.7, 1.0), -0.06)}
        asym_amp = rng.uniform(1.2, 1.8)
        asym_freq = rng.uniform(2.0, 3.0)
        asym_phase = rng.uniform(0.0, 2 * math.pi)
    else:
        arm_spec = {"left": (phi, 0.0)}
    dominant = "both" if arms.startswith("both") else "left"

    kv, kw, kyaw = 8.0, 8.0, 3.0
    poses = [obj.pose]
    s = 0.0
    for k in range(n_frames):
        # Trapezoidal speed profile (15% ramps), normalized to unit mean.
        frac = (k + 0.5) / n_frames
        ease = min(frac / 0.15, 1.0, (1.0 - frac) / 0.15) / 0.85
        v_des_mag = speed * ease
        s = min(s + v_des_mag * DEMO_DT, total)
        tx, ty = float(sx(s, 1)), float(sy(s, 1))
        tn = norm2(tx, ty) or 1.0
        vdx, vdy = v_des_mag * tx / tn, v_des_mag * ty / tn
        yaw_des = math.atan2(ty, tx)
        om_des = max(min(kyaw * wrap_angle(yaw_des - obj.pose.yaw), 0.5), -0.5)
        fx = obj.mass * kv * (vdx - obj.twist.vx)
        fy = obj.mass * kv * (vdy - obj.twist.vy)
        if v_des_mag > 1e-6:
            fx += obj.mu_t * obj.mass * GRAVITY * vdx / v_des_mag
            fy += obj.mu_t * obj.mass * GRAVITY * vdy / v_des_mag
        tau = obj.inertia_z * kw * (om_des - obj.twist.omega)
        if abs(om_des) > 1e-6:
            tau += obj.mu_r * obj.mu_t * obj.mass * GRAVITY * math.copysign(1.0, om_des)
        obj = drive_object(obj, (fx, fy), tau, DEMO_DT, 10)
        poses.append(obj.pose)

    frames = []
    for k in range(n_frames):
        a, b = poses[k], poses[k + 1]
        twist = Twist2((b.x - a.x) / DEMO_DT, (b.y - a.y) / DEMO_DT,
                       wrap_angle(b.yaw - a.yaw) / DEMO_DT)
        keypoints = {}
        contact = {}
        human_root = None
        for arm, (aphi, lat) in arm_spec.items():
            arm_bend = bend
            if arms == "both-asym" and arm == "right":
                frac_k = k / n_frames
                aphi += asym_amp * math.sin(2 * math.pi * asym_freq * frac_k
                                            + asym_phase)
                arm_bend = -bend
            root_pose, shoulder, elbow, wrist = _arm_keypoints(a, footprint, aphi, arm_bend, lat)
            if human_root is None:
                human_root = root_pose
            keypoints[arm] = KeypointSet(
                agent_root=(human_root.x, human_root.y),
                shoulder=shoulder, elbow=elbow, wrist=wrist,
                object_root=(a.x, a.y),
            )
            contact[arm] = True
        frames.append(DemoFrame(
            t=k * DEMO_DT, human_root=human_root, keypoints=keypoints,
            object_pose=a, object_twist=twist, contact=contact,
            dominant_arm=dominant,
        ))
    return DemoTrajectory(object_category=category, frames=tuple(frames),
                          source_tag=arms)


def generate_demos(category: str, count: int, seed: int,
                   arms: str = "single") -> list[DemoTrajectory]:
    if count < 1:
        raise ValueError("count must be >= 1")
    assert morphology_gap() > 0.01, "demonstrator must differ from the robot morphology"
    return [generate_demo(category, seed, i, arms) for i in range(count)]


# --------------------------------------------------------------------------
# Nearest-frame index
# --------------------------------------------------------------------------

class DemoIndex:
    """Vectorized twist-space nearest-neighbor over all contact frames.

    Each contact frame is keyed by its object twist expressed in the frame's own
    object-plane frame; chains are prebuilt per (frame, arm).
    """

    def __init__(self, demos, yaw_len: float = 0.3, arm: str | None = None,
                 aggregate: bool = False):
        self.yaw_len = yaw_len
        self._frames: list[DemoFrame] = []
        self._chains: list[InteractionChain] = []
        rows = []
        for traj in demos:
            for fr in traj.frames:
                if aggregate:
                    # One node-averaged chain per frame with both arms in contact.
                    if not all(fr.contact.get(a) for a in ("left", "right")):
                        continue
                    chains = [chain_from_human(fr, "left")]
                    chains.append(chain_from_human(fr, "right"))
                    per_frame = [aggregate_two_arm(*chains)]
                else:
                    per_frame = [chain_from_human(fr, a) for a in fr.keypoints
                                 if (arm is None or a == arm) and fr.contact[a]]
                for ch in per_frame:
                    vx, vy = rotate(-fr.object_pose.yaw, fr.object_twist.vx,
                                    fr.object_twist.vy)
                    rows.append((vx, vy, fr.object_twist.omega))
                    self._frames.append(fr)
                    self._chains.append(ch)
        if not rows:
            raise EmptyDemoIndexError("no contact frames in the demo set")
        self._twists = np.asarray(rows)

    def __len__(self) -> int:
        return len(self._frames)

    def twist_at(self, i: int) -> Twist2:
        vx, vy, om = self._twists[i]
        return Twist2(float(vx), float(vy), float(om))

    def sample_twist(self, rng: np.random.Generator) -> Twist2:
        i = int(rng.integers(len(self._frames)))
        return self.twist_at(i)

    def nearest(self, target: Twist2) -> tuple[DemoFrame, InteractionChain]:
        d = self._twists - np.array([target.vx, target.vy, target.omega])
        d[:, 2] *= self.yaw_len
        i = int(np.argmin(np.einsum("ij,ij->i", d, d)))
        return self._frames[i], self._chains[i]


def nearest_demo_frame(demos, target_twist: Twist2,
                       yaw_len: float = 0.3, arm: str | None = None):
    """Contact frame whose object twist best matches the target, plus its chain."""
    return DemoIndex(demos, yaw_len=yaw_len, arm=arm).nearest(target_twist)
