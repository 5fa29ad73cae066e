"""Imitation and regularization rewards.

The imitation reward is exp(-chain distance), gated on the grasp carrying force:
with no contact there is no robot chain and the reward is zero. Regularizers
penalize action rate, commanded body rotation, and arm target-tracking error
(the torque stand-in for a servoed arm); the height penalty has no planar
analogue and its weight is fixed at zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .chain import ChainDistanceConfig, InteractionChain, chain_distance, chain_from_robot
from .sim import WorldState


@dataclass(frozen=True)
class RewardConfig:
    chain_cfg: ChainDistanceConfig = field(default_factory=ChainDistanceConfig)
    w_height: float = 0.0
    w_action_rate: float = 0.01
    w_body_rot: float = 0.005
    w_torque_proxy: float = 0.002
    reg_clip: tuple[float, float] = (-1.0, 0.0)

    def __post_init__(self) -> None:
        for w in (self.w_height, self.w_action_rate, self.w_body_rot, self.w_torque_proxy):
            if w < 0:
                raise ValueError("regularizer weights must be >= 0")


@dataclass(frozen=True)
class RewardBreakdown:
    r_imi: float
    r_reg: float
    err_c: Optional[float]      # None when not in contact
    contact: bool
    terms: dict

    @property
    def total(self) -> float:
        return self.r_imi + self.r_reg


def imitation_reward(world: WorldState, demo_chain: InteractionChain,
                     cfg: RewardConfig, robot_index: int = 0) -> RewardBreakdown:
    """exp(-err_c) while the grasp carries force, zero otherwise."""
    if not demo_chain.in_contact:
        raise ValueError("demo chain must be in contact")
    robot_chain = chain_from_robot(world, robot_index)
    if not robot_chain.in_contact:
        return RewardBreakdown(r_imi=0.0, r_reg=0.0, err_c=None, contact=False, terms={})
    err = chain_distance(demo_chain, robot_chain, cfg.chain_cfg)
    return RewardBreakdown(r_imi=math.exp(-err), r_reg=0.0, err_c=err,
                           contact=True, terms={})


def regularization_reward(prev_action: Sequence[float], action: Sequence[float],
                          world: WorldState, cfg: RewardConfig,
                          robot_index: int = 0) -> float:
    """Non-positive penalty on action rate, yaw-rate command, and arm tracking error."""
    if len(prev_action) != len(action):
        raise ValueError("actions must have the same dimension")
    d2 = sum((a - b) ** 2 for a, b in zip(action, prev_action))
    base = robot_index * 6
    yaw_cmd = action[base + 2]
    q = world.robots[robot_index].arm_q
    track2 = sum((action[base + 3 + j] - q[j]) ** 2 for j in range(3))
    r = (-cfg.w_action_rate * d2
         - cfg.w_body_rot * yaw_cmd * yaw_cmd
         - cfg.w_torque_proxy * track2)
    return min(max(r, cfg.reg_clip[0]), cfg.reg_clip[1])
