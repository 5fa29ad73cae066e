"""Comparison reward schemes. All methods train through the identical PPO stack
and environment; only the reward assembly differs.

Methods:
  rl     — object trajectory tracking only.
  rl-ee  — rl plus a global-frame end-effector tracking heuristic (weight 0.5).
  rl-ik  — rl plus the same heuristic measured in each agent's own root frame.
  rl-ig  — interaction-graph edge matching over a fixed 15-edge roster.
  chain  — the interaction-chain imitation reward (rewards.imitation_reward).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .chain import KeypointSet
from .errors import GraphRosterError
from .geometry import Pose2, Twist2, norm2, twist_diff_norm, wrap_angle
from .sim import WorldState, arm_points

EE_TERM_WEIGHT = 0.5
YAW_LEN = 0.3


class MethodId(str, Enum):
    RL = "rl"
    RL_EE = "rl-ee"
    RL_IK = "rl-ik"
    RL_IG = "rl-ig"
    CHAIN = "chain"


# Documented upper bound of each method's per-step task reward.
REWARD_UPPER_BOUND = {
    MethodId.RL: 1.0,
    MethodId.RL_EE: 1.5,
    MethodId.RL_IK: 1.5,
    MethodId.RL_IG: 1.0,
    MethodId.CHAIN: 1.0,
}


@dataclass(frozen=True, slots=True)
class ReferenceFrame:
    """A demonstration frame re-anchored into the simulation's global frame."""

    object_pose: Pose2
    object_twist: Twist2        # global frame
    human_root: Pose2
    keypoints: KeypointSet


def reanchor_frame(demo_frame, arm: str, ref_pose: Pose2,
                   ref_twist: Twist2) -> ReferenceFrame:
    """Rigidly transplant a demo frame so its object sits at the reference pose.

    Keypoints keep their positions relative to the object; the object twist is
    replaced by the reference twist (global frame).
    """
    src = demo_frame.object_pose
    kp = demo_frame.keypoints[arm]

    def move(p):
        return ref_pose.to_world(*src.to_local(p[0], p[1]))

    dyaw = wrap_angle(ref_pose.yaw - src.yaw)
    hx, hy = move((demo_frame.human_root.x, demo_frame.human_root.y))
    return ReferenceFrame(
        object_pose=ref_pose,
        object_twist=ref_twist,
        human_root=Pose2(hx, hy, demo_frame.human_root.yaw + dyaw),
        keypoints=KeypointSet(
            agent_root=move(kp.agent_root),
            shoulder=move(kp.shoulder),
            elbow=move(kp.elbow),
            wrist=move(kp.wrist),
            object_root=(ref_pose.x, ref_pose.y),
        ),
    )


def object_tracking_error(world: WorldState, ref: ReferenceFrame,
                          yaw_len: float = YAW_LEN) -> float:
    o = world.obj
    dpos = norm2(o.pose.x - ref.object_pose.x, o.pose.y - ref.object_pose.y)
    dyaw = abs(wrap_angle(o.pose.yaw - ref.object_pose.yaw))
    dtw = twist_diff_norm(o.twist, ref.object_twist, yaw_len)
    return dpos + yaw_len * dyaw + dtw


def rl_reward(world: WorldState, ref: ReferenceFrame) -> float:
    """Pure object-trajectory tracking; no contact gate, no chain."""
    return math.exp(-object_tracking_error(world, ref))


def _robot_ee(world: WorldState, robot_index: int = 0):
    r = world.robots[robot_index]
    return arm_points(r.root, r.arm_q)[3]


def rl_ee_reward(world: WorldState, ref: ReferenceFrame, robot_index: int = 0) -> float:
    """rl plus global-frame end-effector-to-wrist tracking."""
    ee = _robot_ee(world, robot_index)
    w = ref.keypoints.wrist
    return (rl_reward(world, ref)
            + EE_TERM_WEIGHT * math.exp(-norm2(ee[0] - w[0], ee[1] - w[1])))


def rl_ik_reward(world: WorldState, ref: ReferenceFrame, robot_index: int = 0) -> float:
    """rl plus end-effector tracking with positions taken in each agent's root frame."""
    r = world.robots[robot_index]
    ee_local = r.root.to_local(*_robot_ee(world, robot_index))
    wrist_local = ref.human_root.to_local(*ref.keypoints.wrist)
    d = norm2(ee_local[0] - wrist_local[0], ee_local[1] - wrist_local[1])
    return rl_reward(world, ref) + EE_TERM_WEIGHT * math.exp(-d)


# Fixed interaction-graph roster: all pairs among the five named keypoints, plus
# the wrist's edges to five object markers (center and the four boundary points
# on the object-frame axes).
_NODE_NAMES = ("agent_root", "shoulder", "elbow", "wrist", "object_root")
_NODE_PAIRS = [(_NODE_NAMES[i], _NODE_NAMES[j])
               for i in range(5) for j in range(i + 1, 5)]
_MARKER_LOCALS = ((0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0))


def _graph_nodes_human(ref: ReferenceFrame) -> dict:
    kp = ref.keypoints
    return {
        "agent_root": kp.agent_root, "shoulder": kp.shoulder,
        "elbow": kp.elbow, "wrist": kp.wrist, "object_root": kp.object_root,
    }


def _graph_nodes_robot(world: WorldState, robot_index: int = 0) -> dict:
    r = world.robots[robot_index]
    j1, j2, _j3, ee = arm_points(r.root, r.arm_q)
    return {
        "agent_root": (r.root.x, r.root.y), "shoulder": j1,
        "elbow": j2, "wrist": ee,
        "object_root": (world.obj.pose.x, world.obj.pose.y),
    }


def _edge_error(a0, a1, b0, b1) -> float:
    """Length difference plus unit-direction difference between two edges."""
    avx, avy = a1[0] - a0[0], a1[1] - a0[1]
    bvx, bvy = b1[0] - b0[0], b1[1] - b0[1]
    la, lb = norm2(avx, avy), norm2(bvx, bvy)
    err = abs(la - lb)
    if la > 1e-9 and lb > 1e-9:
        err += norm2(avx / la - bvx / lb, avy / la - bvy / lb)
    return err


def rl_ig_reward(world: WorldState, ref: ReferenceFrame, robot_index: int = 0) -> float:
    """Planar interaction-graph baseline: exp(-mean error) over 15 fixed edges."""
    hn = _graph_nodes_human(ref)
    rn = _graph_nodes_robot(world, robot_index)
    for name in _NODE_NAMES:
        if hn.get(name) is None or rn.get(name) is None:
            raise GraphRosterError(f"missing keypoint {name!r}")
    total = 0.0
    for a, b in _NODE_PAIRS:
        total += _edge_error(hn[a], hn[b], rn[a], rn[b])
    # Wrist edges to the object markers; the markers are shared geometry, placed
    # from each side's own object pose (identical when tracking is perfect).
    r_h = world.obj.footprint_radius
    for mx, my in _MARKER_LOCALS:
        hm = ref.object_pose.to_world(mx * r_h, my * r_h)
        rm = world.obj.pose.to_world(mx * r_h, my * r_h)
        total += _edge_error(hn["wrist"], hm, rn["wrist"], rm)
    n_edges = len(_NODE_PAIRS) + len(_MARKER_LOCALS)
    return math.exp(-total / n_edges)
