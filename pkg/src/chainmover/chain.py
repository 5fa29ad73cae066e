"""Interaction chains: the morphology-agnostic agent-object coupling descriptor.

A chain runs from the object root to the agent root through the manipulating
limb. Segments are unit direction vectors expressed in the object-plane frame
(the gravity-aligned frame at the object position, rotated by object yaw), so
chains are invariant under rigid world transforms and under uniform scaling of
the agent's limb lengths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import ChainShapeMismatchError, DegenerateChainError
from .geometry import Pose2, Twist2, norm2, rotate, twist_diff_norm, wrap_angle
from .sim import WorldState, arm_points

Point = tuple[float, float]

_MIN_SEPARATION = 1e-6


@dataclass(frozen=True, slots=True)
class KeypointSet:
    """Named global-frame keypoints of one agent arm plus the object root."""

    agent_root: Point
    shoulder: Point
    elbow: Point
    wrist: Point
    object_root: Point

    def ordered(self) -> tuple[Point, ...]:
        """Chain node order: object root first, agent root last."""
        return (self.object_root, self.wrist, self.elbow, self.shoulder, self.agent_root)


@dataclass(frozen=True, slots=True)
class InteractionChain:
    obj_pos: Point
    obj_yaw: float
    obj_twist: Twist2            # global frame
    segments: tuple[Point, ...]  # unit vectors, object-plane frame, object end first
    in_contact: bool

    def twist_object_plane(self) -> Twist2:
        """The object twist expressed in this chain's own object-plane frame."""
        return self.obj_twist.rotated(-self.obj_yaw)


@dataclass(frozen=True, slots=True)
class ChainDistanceConfig:
    alpha: float = 0.8           # geometric per-segment weight, object end heaviest
    pos_weight: float = 1.0
    yaw_len: float = 0.3         # meters per radian for heading and yaw-rate errors
    truncate_mismatch: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")
        if self.pos_weight <= 0 or self.yaw_len <= 0:
            raise ValueError("pos_weight and yaw_len must be positive")


def chain_from_nodes(nodes: tuple[Point, ...], obj_pose: Pose2, obj_twist: Twist2,
                     in_contact: bool) -> InteractionChain:
    """Build a chain from global-frame node positions (object root first)."""
    segments = []
    for (ax, ay), (bx, by) in zip(nodes[:-1], nodes[1:]):
        dx, dy = bx - ax, by - ay
        n = norm2(dx, dy)
        if n <= _MIN_SEPARATION:
            raise DegenerateChainError(f"coincident chain nodes near ({ax:.4f}, {ay:.4f})")
        segments.append(rotate(-obj_pose.yaw, dx / n, dy / n))
    return InteractionChain(
        obj_pos=(obj_pose.x, obj_pose.y),
        obj_yaw=obj_pose.yaw,
        obj_twist=obj_twist,
        segments=tuple(segments),
        in_contact=in_contact,
    )


def chain_from_keypoints(kp: KeypointSet, obj_pose: Pose2, obj_twist: Twist2,
                         in_contact: bool) -> InteractionChain:
    return chain_from_nodes(kp.ordered(), obj_pose, obj_twist, in_contact)


def chain_from_human(frame, arm: str) -> InteractionChain:
    """Chain for the selected arm of a demonstration frame.

    Nodes: object root, wrist, elbow, shoulder, agent root (5 nodes, 4 segments).
    """
    kp = frame.keypoints[arm]
    return chain_from_keypoints(kp, frame.object_pose, frame.object_twist,
                                frame.contact[arm])


def chain_from_robot(world: WorldState, robot_index: int = 0) -> InteractionChain:
    """Chain through the robot arm, formed only while the grasp carries force.

    Nodes: object root, end-effector, second arm joint, arm base, robot root.
    With no contact force the chain has no segments and in_contact is False.
    """
    robot = world.robots[robot_index]
    obj = world.obj
    if robot.ee_force <= 0.0:
        return InteractionChain(
            obj_pos=(obj.pose.x, obj.pose.y),
            obj_yaw=obj.pose.yaw,
            obj_twist=obj.twist,
            segments=(),
            in_contact=False,
        )
    j1, j2, _j3, ee = arm_points(robot.root, robot.arm_q)
    nodes = ((obj.pose.x, obj.pose.y), ee, j2, j1, (robot.root.x, robot.root.y))
    return chain_from_nodes(nodes, obj.pose, obj.twist, True)


def object_motion_error(a: InteractionChain, b: InteractionChain,
                        cfg: ChainDistanceConfig) -> float:
    """Object term of the chain distance: position, heading, and twist mismatch.

    Twists are compared in each chain's own object-plane frame.
    """
    dpos = norm2(a.obj_pos[0] - b.obj_pos[0], a.obj_pos[1] - b.obj_pos[1])
    dyaw = abs(wrap_angle(a.obj_yaw - b.obj_yaw))
    dtw = twist_diff_norm(a.twist_object_plane(), b.twist_object_plane(), cfg.yaw_len)
    return dpos + cfg.yaw_len * dyaw + dtw


def chain_distance(human: InteractionChain, robot: InteractionChain,
                   cfg: ChainDistanceConfig) -> float:
    """Weighted chain mismatch: object-motion error plus per-segment direction error.

    Segment i (counted from 1 at the object-adjacent end) contributes
    alpha**i * ||seg_h - seg_r||; the object term carries pos_weight.
    """
    if not (human.in_contact and robot.in_contact):
        raise ValueError("chain_distance requires both chains in contact")
    n_h, n_r = len(human.segments), len(robot.segments)
    if n_h != n_r and not cfg.truncate_mismatch:
        raise ChainShapeMismatchError(f"segment counts differ: {n_h} vs {n_r}")
    n = min(n_h, n_r)
    err = cfg.pos_weight * object_motion_error(human, robot, cfg)
    w = 1.0
    for i in range(n):
        w *= cfg.alpha
        hs, rs_ = human.segments[i], robot.segments[i]
        err += w * norm2(hs[0] - rs_[0], hs[1] - rs_[1])
    return err


def reconstruct_nodes(chain: InteractionChain) -> tuple[Point, ...]:
    """Node positions of the normalized chain: cumulative sum of unit segments,
    starting at the object root (origin of the object-plane frame)."""
    nodes = [(0.0, 0.0)]
    x = y = 0.0
    for sx, sy in chain.segments:
        x += sx
        y += sy
        nodes.append((x, y))
    return tuple(nodes)


def aggregate_two_arm(left: InteractionChain, right: InteractionChain) -> InteractionChain:
    """Merge two same-frame arm chains by node-wise midpoint averaging.

    Nodes of each normalized chain are reconstructed from its segments, averaged
    pairwise, and the averaged polyline is re-normalized into unit segments. The
    first node (object root) is preserved exactly; the last node is the midpoint
    of the two agent-root nodes.
    """
    if len(left.segments) != len(right.segments):
        raise ChainShapeMismatchError(
            f"node counts differ: {len(left.segments) + 1} vs {len(right.segments) + 1}")
    ln = reconstruct_nodes(left)
    rn = reconstruct_nodes(right)
    avg = [((lx + rx) / 2.0, (ly + ry) / 2.0) for (lx, ly), (rx, ry) in zip(ln, rn)]
    segments = []
    for (ax, ay), (bx, by) in zip(avg[:-1], avg[1:]):
        dx, dy = bx - ax, by - ay
        n = norm2(dx, dy)
        if n <= _MIN_SEPARATION:
            raise DegenerateChainError("averaged consecutive nodes coincide")
        segments.append((dx / n, dy / n))
    return replace(left, segments=tuple(segments),
                   in_contact=left.in_contact and right.in_contact)
