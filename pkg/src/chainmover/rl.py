"""Task environments and the PPO training stack.

The policy is conditioned on a target object twist (object-plane frame) held
fixed per episode and drawn from the demonstration twist distribution. A
reference object pose integrates the commanded twist; every method's reward is
assembled against that reference, differing only in which terms it adds.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import sim
from .baselines import MethodId, ReferenceFrame, reanchor_frame, rl_ee_reward, \
    rl_ig_reward, rl_ik_reward, rl_reward
from .chain import InteractionChain
from .demos import DemoIndex
from .errors import SimDivergedError, TrainingDivergedError
from .geometry import Pose2, Twist2, pose_error, rotate
from .nets import (Adam, CriticNet, PolicyNet, Var, clip, clip_grad_norm, exp,
                   load_checkpoint, minimum, save_checkpoint, vmean)
from .rewards import RewardConfig, imitation_reward, regularization_reward
from .sim import ACTION_DIM, ACTION_HIGH, ACTION_LOW, EnvConfig, WorldState

OBS_DIM = 14
CRITIC_EXTRA = 5   # target yaw, current object yaw, object twist (3)

# Initial exploration noise per action dimension (root twist, then arm targets).
EXPLORE_LOG_STD = (-1.9, -1.9, -1.9, -3.0, -3.0, -3.0)


def integrate_reference(pose: Pose2, cmd: Twist2, dt: float) -> Pose2:
    """Advance a reference pose by one step of a body-frame twist command."""
    vx, vy = rotate(pose.yaw, cmd.vx, cmd.vy)
    return Pose2(pose.x + vx * dt, pose.y + vy * dt, pose.yaw + cmd.omega * dt)


def build_observation(world: WorldState, target_global: Twist2,
                      robot_index: int = 0) -> np.ndarray:
    """Policy observation: target twist re-expressed in the current object-plane
    frame, root twist (robot frame), arm state, gripper opening, contact flag.

    Expressing the commanded twist in the object's own frame is what makes yaw
    drift observable to an otherwise object-blind policy: if the object turns
    away from the commanded heading, the observed command rotates with it."""
    r = world.robots[robot_index]
    tw = r.root_twist.rotated(-r.root.yaw)
    tgt = target_global.rotated(-world.obj.pose.yaw)
    return np.array([
        tgt.vx, tgt.vy, tgt.omega,
        tw.vx, tw.vy, tw.omega,
        *r.arm_q, *r.arm_dq,
        r.gripper_open,
        1.0 if r.ee_force > 0.0 else 0.0,
    ])


def build_critic_extra(world: WorldState, ref_pose: Pose2) -> np.ndarray:
    o = world.obj
    return np.array([ref_pose.yaw, o.pose.yaw, o.twist.vx, o.twist.vy, o.twist.omega])


def grasp_initialized_reset(cfg: EnvConfig, seed: int,
                            approach_arc: float = 0.0,
                            start_gap: float = 0.0) -> WorldState:
    """reset() followed by a scripted blind grasp: the root is moved the minimum
    amount needed to put the straight-arm end-effector on the object boundary,
    facing the object, and the coupling is attached there.

    approach_arc shifts the contact point along the boundary by that arc length
    (meters); used for initial-condition sensitivity runs. start_gap > 0 instead
    leaves the end-effector that far short of the boundary and detached, so the
    policy has to close the gap (contact auto-engages within the attach
    tolerance).
    """
    world = sim.reset(cfg, seed)
    r = world.robot.root
    o = world.obj.pose
    dx, dy = o.x - r.x, o.y - r.y
    d = math.hypot(dx, dy)
    ux, uy = dx / d, dy / d
    if approach_arc:
        ux, uy = rotate(approach_arc / world.obj.footprint_radius, ux, uy)
    reach = sim.ARM_BASE_OFFSET + sum(sim.ARM_LINKS)
    bx, by = o.x - ux * world.obj.footprint_radius, o.y - uy * world.obj.footprint_radius
    back = reach + max(0.0, start_gap)
    root = Pose2(bx - ux * back, by - uy * back, math.atan2(uy, ux))
    robots = (replace(world.robot, root=root),)
    world = replace(world, robots=robots)
    if start_gap > 0.0:
        return world
    ee = sim.ee_position(root, world.robot.arm_q)
    world = sim.attach_grasp(world, ee, 0,
                             stiffness=cfg.grasp_stiffness, damping=cfg.grasp_damping,
                             breakaway_force=cfg.breakaway_force,
                             tangential_mu=cfg.grasp_tangential_mu)
    return world


def _rot_torque_penalty(action, world: WorldState, cfg: RewardConfig, robot_index: int) -> float:
    base = robot_index * ACTION_DIM
    q = world.robots[robot_index].arm_q
    track2 = sum((action[base + 3 + j] - q[j]) ** 2 for j in range(3))
    return -cfg.w_body_rot * action[base + 2] ** 2 - cfg.w_torque_proxy * track2


def sample_command_twist(rng: np.random.Generator) -> Twist2:
    """Planar drive commands: straight lines, in-place turns, and tight arcs.

    Rotation-dominant commands get most of the mass. They are the hardest to
    execute (the root must orbit the object), demo twists never contain them,
    and a policy that resolves turn commands into tight, slow arcs keeps its
    turning radius small — which is what lets a waypoint follower settle onto
    a goal instead of circling it at its minimum turning radius.
    """
    u = rng.random()
    if u < 0.3:
        return Twist2(float(rng.uniform(0.1, 0.4)), 0.0, 0.0)
    if u < 0.7:
        sign = -1.0 if rng.random() < 0.5 else 1.0
        return Twist2(0.0, 0.0, float(sign * rng.uniform(0.15, 0.5)))
    sign = -1.0 if rng.random() < 0.5 else 1.0
    return Twist2(float(rng.uniform(0.05, 0.2)), 0.0,
                  float(sign * rng.uniform(0.25, 0.5)))


def _episode_target(cfg: EnvConfig, index: DemoIndex,
                    rng: np.random.Generator) -> Twist2:
    if cfg.command_mix > 0.0 and rng.random() < cfg.command_mix:
        return sample_command_twist(rng)
    return index.sample_twist(rng)


class MoverTaskEnv:
    """Single-robot object-moving episode with a per-episode twist command."""

    def __init__(self, env_cfg: EnvConfig, index: DemoIndex, method: MethodId,
                 reward_cfg: RewardConfig | None = None,
                 term_tracking_error: float | None = 1.5):
        self.cfg = env_cfg
        self.index = index
        self.method = MethodId(method)
        self.reward_cfg = reward_cfg or RewardConfig()
        # Failure termination: once the object is this far off the reference the
        # episode is unrecoverable; ending it keeps the value target clean.
        self.term_tracking_error = term_tracking_error
        self.world: WorldState | None = None
        self.target = Twist2(0.0, 0.0, 0.0)
        self.ref_pose = Pose2(0.0, 0.0, 0.0)
        self.steps = 0
        self.prev_action = np.zeros(ACTION_DIM)
        self.approach_arc = 0.0     # grasp-point offset along the boundary (m)
        self._demo_frame = None
        self._demo_chain = None
        self._demo_arm = "left"

    @property
    def obs_dim(self) -> int:
        return OBS_DIM

    @property
    def act_dim(self) -> int:
        return ACTION_DIM

    @property
    def critic_dim(self) -> int:
        return OBS_DIM + CRITIC_EXTRA

    @property
    def explore_log_std(self):
        # Arm-target noise must stay small or exploration tears the grasp off.
        return EXPLORE_LOG_STD

    def reset(self, seed: int, target: Twist2 | None = None) -> np.ndarray:
        self.world = grasp_initialized_reset(self.cfg, seed, self.approach_arc,
                                             self.cfg.start_gap)
        self._cmd_rng = np.random.default_rng([abs(self.cfg.rng_seed) + 1,
                                               abs(seed)])
        if target is None:
            target = _episode_target(self.cfg, self.index, self._cmd_rng)
        self._set_target(target)
        self.ref_pose = self.world.obj.pose
        self.steps = 0
        self.prev_action = np.zeros(ACTION_DIM)
        return self.observe()

    def _set_target(self, target: Twist2) -> None:
        self.target = target
        self._demo_frame, self._demo_chain = self.index.nearest(target)
        self._demo_arm = next(iter(self._demo_frame.keypoints))

    def observe(self) -> np.ndarray:
        return build_observation(self.world, self._ref_twist_global())

    def critic_observe(self) -> np.ndarray:
        return np.concatenate([self.observe(), build_critic_extra(self.world, self.ref_pose)])

    def _ref_twist_global(self) -> Twist2:
        return self.target.rotated(self.ref_pose.yaw)

    def reference_chain(self) -> InteractionChain:
        """Demo chain segments transplanted onto the commanded reference motion."""
        return InteractionChain(
            obj_pos=(self.ref_pose.x, self.ref_pose.y),
            obj_yaw=self.ref_pose.yaw,
            obj_twist=self._ref_twist_global(),
            segments=self._demo_chain.segments,
            in_contact=True,
        )

    def reference_frame(self) -> ReferenceFrame:
        return reanchor_frame(self._demo_frame, self._demo_arm, self.ref_pose,
                              self._ref_twist_global())

    def task_reward(self) -> tuple[float, dict]:
        info: dict = {}
        if self.method is MethodId.CHAIN:
            br = imitation_reward(self.world, self.reference_chain(), self.reward_cfg)
            info["err_c"] = br.err_c
            info["r_imi"] = br.r_imi
            return br.r_imi, info
        ref = self.reference_frame()
        if self.method is MethodId.RL:
            return rl_reward(self.world, ref), info
        if self.method is MethodId.RL_EE:
            return rl_ee_reward(self.world, ref), info
        if self.method is MethodId.RL_IK:
            return rl_ik_reward(self.world, ref), info
        return rl_ig_reward(self.world, ref), info

    def step(self, action) -> tuple[np.ndarray, float, bool, dict]:
        action = np.asarray(action, dtype=np.float64)
        if (self.cfg.command_hold > 0 and self.steps > 0
                and self.steps % self.cfg.command_hold == 0):
            # Switch commands mid-flight; the reference keeps integrating from
            # where it is, so idling through a switch still accrues tracking
            # error (and the early-termination penalty that comes with it).
            self._set_target(_episode_target(self.cfg, self.index, self._cmd_rng))
        try:
            self.world = sim.step(self.world, action, self.cfg)
        except SimDivergedError:
            self.steps += 1
            return self.observe() * 0.0, 0.0, True, {"diverged": True}
        self.ref_pose = integrate_reference(self.ref_pose, self.target, self.cfg.control_dt)
        reward, info = self.task_reward()
        reward += regularization_reward(self.prev_action, action, self.world, self.reward_cfg)
        self.prev_action = action
        self.steps += 1
        done = self.steps >= self.cfg.episode_len
        track_err = pose_error(self.world.obj.pose, self.ref_pose,
                               self.reward_cfg.chain_cfg.yaw_len)
        if self.term_tracking_error is not None and track_err > self.term_tracking_error:
            done = True
        info["tracking_error"] = track_err
        info["attached"] = self.world.attached()
        info["breaks"] = self.world.break_counts[0]
        return self.observe(), reward, done, info


class TwoRobotTaskEnv:
    """Centralized two-robot episode: concatenated observations and actions,
    summed per-robot imitation rewards against the left/right arm chains."""

    def __init__(self, env_cfg: EnvConfig, index: DemoIndex,
                 reward_cfg: RewardConfig | None = None,
                 term_tracking_error: float | None = 1.5):
        self.cfg = env_cfg
        self.index = index
        self.reward_cfg = reward_cfg or RewardConfig()
        self.term_tracking_error = term_tracking_error
        self.world: WorldState | None = None
        self.target = Twist2(0.0, 0.0, 0.0)
        self.ref_pose = Pose2(0.0, 0.0, 0.0)
        self.steps = 0
        self.prev_action = np.zeros(2 * ACTION_DIM)
        self._chains = (None, None)

    @property
    def obs_dim(self) -> int:
        return 2 * OBS_DIM

    @property
    def act_dim(self) -> int:
        return 2 * ACTION_DIM

    @property
    def critic_dim(self) -> int:
        return 2 * OBS_DIM + CRITIC_EXTRA

    @property
    def explore_log_std(self):
        return EXPLORE_LOG_STD * 2

    def reset(self, seed: int, target: Twist2 | None = None) -> np.ndarray:
        world = sim.make_two_robot_world(self.cfg, seed)
        for i in range(2):
            ee = sim.ee_position(world.robots[i].root, world.robots[i].arm_q)
            world = sim.attach_grasp(world, ee, i,
                                     stiffness=self.cfg.grasp_stiffness,
                                     damping=self.cfg.grasp_damping,
                                     breakaway_force=self.cfg.breakaway_force,
                                     tangential_mu=self.cfg.grasp_tangential_mu)
        self.world = world
        if target is None:
            rng = np.random.default_rng([abs(self.cfg.rng_seed) + 2, abs(seed)])
            target = _episode_target(self.cfg, self.index, rng)
        self.target = target
        frame, _ = self.index.nearest(target)
        from .chain import chain_from_human
        self._chains = (chain_from_human(frame, "left"), chain_from_human(frame, "right"))
        self.ref_pose = self.world.obj.pose
        self.steps = 0
        self.prev_action = np.zeros(2 * ACTION_DIM)
        return self.observe()

    def observe(self) -> np.ndarray:
        tgt = self.target.rotated(self.ref_pose.yaw)
        return np.concatenate([build_observation(self.world, tgt, i)
                               for i in range(2)])

    def critic_observe(self) -> np.ndarray:
        return np.concatenate([self.observe(), build_critic_extra(self.world, self.ref_pose)])

    def _ref_chain(self, i: int) -> InteractionChain:
        return InteractionChain(
            obj_pos=(self.ref_pose.x, self.ref_pose.y),
            obj_yaw=self.ref_pose.yaw,
            obj_twist=self.target.rotated(self.ref_pose.yaw),
            segments=self._chains[i].segments,
            in_contact=True,
        )

    def step(self, action) -> tuple[np.ndarray, float, bool, dict]:
        action = np.asarray(action, dtype=np.float64)
        try:
            self.world = sim.step(self.world, action, self.cfg)
        except SimDivergedError:
            self.steps += 1
            return self.observe() * 0.0, 0.0, True, {"diverged": True}
        self.ref_pose = integrate_reference(self.ref_pose, self.target, self.cfg.control_dt)
        cfgr = self.reward_cfg
        reward = 0.0
        r_imis = []
        for i in range(2):
            br = imitation_reward(self.world, self._ref_chain(i), cfgr, robot_index=i)
            reward += br.r_imi
            r_imis.append(br.r_imi)
        reg = -cfgr.w_action_rate * float(((action - self.prev_action) ** 2).sum())
        for i in range(2):
            reg += _rot_torque_penalty(action, self.world, cfgr, i)
        reward += min(max(reg, cfgr.reg_clip[0]), cfgr.reg_clip[1])
        self.prev_action = action
        self.steps += 1
        done = self.steps >= self.cfg.episode_len
        track_err = pose_error(self.world.obj.pose, self.ref_pose,
                               cfgr.chain_cfg.yaw_len)
        if self.term_tracking_error is not None and track_err > self.term_tracking_error:
            done = True
        info = {"r_imi": sum(r_imis), "tracking_error": track_err,
                "attached": all(self.world.attached(i) for i in range(2)),
                "breaks": sum(self.world.break_counts)}
        return self.observe(), reward, done, info


class PointMassTaskEnv:
    """Toy twist-tracking env (the object is the agent; no arm, no grasp)."""

    ACT_LOW = (-1.0, -1.0, -1.5)
    ACT_HIGH = (1.0, 1.0, 1.5)
    TAU = 0.2
    ERR_SCALE = 3.0     # sharpens the reward so an idle policy scores low

    def __init__(self, episode_len: int = 100, dt: float = 0.05):
        self.episode_len = episode_len
        self.dt = dt
        self.twist = np.zeros(3)
        self.target = np.zeros(3)
        self.steps = 0

    obs_dim = 6
    act_dim = 3

    @property
    def critic_dim(self) -> int:
        return self.obs_dim

    def reset(self, seed: int, target=None) -> np.ndarray:
        rng = np.random.default_rng(abs(seed))
        self.target = rng.uniform(-0.5, 0.5, size=3)
        self.twist = np.zeros(3)
        self.steps = 0
        return self.observe()

    def observe(self) -> np.ndarray:
        return np.concatenate([self.target, self.twist])

    def critic_observe(self) -> np.ndarray:
        return self.observe()

    def step(self, action):
        a = np.clip(np.asarray(action, dtype=np.float64), self.ACT_LOW, self.ACT_HIGH)
        self.twist += (self.dt / self.TAU) * (a - self.twist)
        d = self.twist - self.target
        err = math.sqrt(d[0] ** 2 + d[1] ** 2 + (0.3 * d[2]) ** 2)
        reward = math.exp(-self.ERR_SCALE * err)
        self.steps += 1
        return self.observe(), reward, self.steps >= self.episode_len, {}


# --------------------------------------------------------------------------
# PPO machinery
# --------------------------------------------------------------------------

@dataclass
class PpoConfig:
    num_envs: int = 256
    rollout_len: int = 64
    epochs: int = 4
    minibatches: int = 4
    clip_eps: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    lr: float = 3e-4
    entropy_coef: float = 0.003
    value_coef: float = 0.5
    max_grad_norm: float = 1.0
    total_updates: int = 100
    seed: int = 0
    hidden: tuple = (512, 256, 128)
    checkpoint_every: int = 25

    def validate(self) -> None:
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError("clip_eps must be in (0, 1)")
        for name in ("num_envs", "rollout_len", "epochs", "minibatches", "total_updates"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
        gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation.

    rewards, dones: (T, N); values: (T+1, N) with the bootstrap value appended.
    Returns (advantages, returns), both (T, N).
    """
    t_len = rewards.shape[0]
    if values.shape[0] != t_len + 1 or dones.shape[0] != t_len:
        raise ValueError("values must have one more row than rewards/dones")
    adv = np.zeros_like(rewards)
    last = np.zeros(rewards.shape[1])
    for t in range(t_len - 1, -1, -1):
        not_done = 1.0 - dones[t]
        delta = rewards[t] + gamma * values[t + 1] * not_done - values[t]
        last = delta + gamma * lam * not_done * last
        adv[t] = last
    return adv, adv + values[:-1]


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    return (adv - adv.mean()) / (adv.std() + 1e-8)


def ppo_loss(policy: PolicyNet, critic: CriticNet, batch: dict, cfg: PpoConfig) -> tuple[Var, dict]:
    """Clipped-surrogate PPO loss over one minibatch (advantages pre-normalized)."""
    logp = policy.log_prob_var(batch["obs"], batch["u"])
    ratio = exp(logp + Var(-batch["old_logp"]))
    adv = Var(batch["adv"])
    surr = minimum(ratio * adv, clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv)
    policy_loss = -vmean(surr)
    v = critic.value_var(batch["critic_obs"])
    value_loss = vmean((v - Var(batch["ret"])) ** 2)
    entropy = policy.entropy_var()
    loss = policy_loss + cfg.value_coef * value_loss + (-cfg.entropy_coef) * entropy
    with np.errstate(over="ignore"):
        clip_frac = float(np.mean(np.abs(ratio.value - 1.0) > cfg.clip_eps))
        approx_kl = float(np.mean(batch["old_logp"] - logp.value))
    stats = {
        "policy_loss": float(policy_loss.value),
        "value_loss": float(value_loss.value),
        "entropy": float(entropy.value),
        "clip_fraction": clip_frac,
        "approx_kl": approx_kl,
    }
    return loss, stats


def ppo_update(policy: PolicyNet, critic: CriticNet, optimizer: Adam,
               batch: dict, cfg: PpoConfig, rng: np.random.Generator) -> dict:
    """One optimization phase: epochs x minibatches over the gathered batch."""
    n = batch["obs"].shape[0]
    batch = dict(batch)
    batch["adv"] = normalize_advantages(batch["adv"])
    stats = {}
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for mb in np.array_split(order, cfg.minibatches):
            sub = {k: v[mb] for k, v in batch.items()}
            loss, stats = ppo_loss(policy, critic, sub, cfg)
            if not np.isfinite(loss.value):
                raise TrainingDivergedError("non-finite PPO loss")
            loss.backward()
            clip_grad_norm(policy.params + critic.params, cfg.max_grad_norm)
            optimizer.step()
    return stats


# --------------------------------------------------------------------------
# Training loop
# --------------------------------------------------------------------------

@dataclass
class TrainResult:
    checkpoints: list
    log_rows: list
    final_policy: PolicyNet
    final_critic: CriticNet


LOG_COLUMNS = ("update", "env_steps", "mean_return", "mean_reward", "mean_r_imi",
               "mean_err_c", "mean_tracking_error", "policy_loss", "value_loss",
               "entropy", "clip_fraction", "approx_kl")


def _write_log_row(path: str, row: dict) -> None:
    new = not os.path.exists(path)
    with open(path, "a") as f:
        if new:
            f.write("\t".join(LOG_COLUMNS) + "\n")
        f.write("\t".join(f"{row.get(c, float('nan')):.6g}" if c != "update"
                          else str(row[c]) for c in LOG_COLUMNS) + "\n")


def make_envs(method: MethodId, index: DemoIndex, env_cfg: EnvConfig,
              num_envs: int, two_robot: bool = False) -> list:
    if two_robot:
        return [TwoRobotTaskEnv(env_cfg, index) for _ in range(num_envs)]
    return [MoverTaskEnv(env_cfg, index, method) for _ in range(num_envs)]


def train_loop(envs: list, ppo_cfg: PpoConfig, out_dir: str,
               meta: dict | None = None) -> TrainResult:
    """Generic PPO loop over a homogeneous env list. Fully seeded: networks,
    action noise, minibatch shuffles, and per-env episode seeds all derive from
    ppo_cfg.seed."""
    ppo_cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    obs_dim = envs[0].obs_dim
    act_dim = envs[0].act_dim
    critic_dim = envs[0].critic_dim
    act_low = getattr(envs[0], "ACT_LOW", None) or ACTION_LOW * (act_dim // ACTION_DIM)
    act_high = getattr(envs[0], "ACT_HIGH", None) or ACTION_HIGH * (act_dim // ACTION_DIM)

    net_rng = np.random.default_rng([ppo_cfg.seed & ((1 << 62) - 1), 11])
    init_log_std = getattr(envs[0], "explore_log_std", -0.7)
    policy = PolicyNet(obs_dim, act_low, act_high, ppo_cfg.hidden, net_rng,
                       init_log_std=init_log_std)
    critic = CriticNet(critic_dim, ppo_cfg.hidden, net_rng)
    optimizer = Adam(policy.params + critic.params, lr=ppo_cfg.lr)
    act_rng = np.random.default_rng([ppo_cfg.seed & ((1 << 62) - 1), 13])
    shuffle_rng = np.random.default_rng([ppo_cfg.seed & ((1 << 62) - 1), 17])

    episode_counter = 0
    n = len(envs)
    obs = np.zeros((n, obs_dim))
    for i, env in enumerate(envs):
        obs[i] = env.reset(ppo_cfg.seed * 1_000_003 + episode_counter + i)
    episode_counter += n

    ep_returns = np.zeros(n)
    finished_returns: list[float] = []
    checkpoints = []
    log_rows = []
    log_path = os.path.join(out_dir, "train_log.tsv")
    meta = dict(meta or {})
    meta.update({
        "obs_dim": obs_dim, "act_dim": act_dim, "critic_dim": critic_dim,
        "hidden": list(ppo_cfg.hidden), "act_low": list(act_low),
        "act_high": list(act_high), "seed": ppo_cfg.seed,
    })

    def save(update: int, tag: str) -> str:
        path = os.path.join(out_dir, f"checkpoint_{tag}.ckpt")
        save_checkpoint(path, {**meta, "update": update,
                               "n_policy_params": len(policy.params)},
                        policy.params + critic.params)
        return path

    env_steps = 0
    t_len = ppo_cfg.rollout_len
    for update in range(1, ppo_cfg.total_updates + 1):
        obs_buf = np.zeros((t_len, n, obs_dim))
        cobs_buf = np.zeros((t_len, n, critic_dim))
        u_buf = np.zeros((t_len, n, act_dim))
        logp_buf = np.zeros((t_len, n))
        rew_buf = np.zeros((t_len, n))
        done_buf = np.zeros((t_len, n))
        infos_acc: dict[str, list] = {"r_imi": [], "err_c": [], "tracking_error": []}

        for t in range(t_len):
            obs_buf[t] = obs
            for i, env in enumerate(envs):
                cobs_buf[t, i] = env.critic_observe()
            actions, u, logp = policy.sample(obs, act_rng)
            u_buf[t] = u
            logp_buf[t] = logp
            for i, env in enumerate(envs):
                o2, r, done, info = env.step(actions[i])
                rew_buf[t, i] = r
                ep_returns[i] += r
                for k in infos_acc:
                    if info.get(k) is not None:
                        infos_acc[k].append(info[k])
                if done:
                    done_buf[t, i] = 1.0
                    finished_returns.append(ep_returns[i])
                    ep_returns[i] = 0.0
                    o2 = env.reset(ppo_cfg.seed * 1_000_003 + episode_counter)
                    episode_counter += 1
                obs[i] = o2
            env_steps += n

        values = np.zeros((t_len + 1, n))
        for t in range(t_len):
            values[t] = critic.value(cobs_buf[t])
        boot = np.zeros((n, critic_dim))
        for i, env in enumerate(envs):
            boot[i] = env.critic_observe()
        values[t_len] = critic.value(boot)
        adv, ret = gae(rew_buf, values, done_buf, ppo_cfg.gamma, ppo_cfg.lam)

        batch = {
            "obs": obs_buf.reshape(t_len * n, obs_dim),
            "critic_obs": cobs_buf.reshape(t_len * n, critic_dim),
            "u": u_buf.reshape(t_len * n, act_dim),
            "old_logp": logp_buf.reshape(t_len * n),
            "adv": adv.reshape(t_len * n),
            "ret": ret.reshape(t_len * n),
        }
        stats = ppo_update(policy, critic, optimizer, batch, ppo_cfg, shuffle_rng)

        recent = finished_returns[-5 * n:] if finished_returns else [float(ep_returns.mean())]
        row = {
            "update": update,
            "env_steps": env_steps,
            "mean_return": float(np.mean(recent)),
            "mean_reward": float(rew_buf.mean()),
            "mean_r_imi": float(np.mean(infos_acc["r_imi"])) if infos_acc["r_imi"] else float("nan"),
            "mean_err_c": float(np.mean(infos_acc["err_c"])) if infos_acc["err_c"] else float("nan"),
            "mean_tracking_error": (float(np.mean(infos_acc["tracking_error"]))
                                    if infos_acc["tracking_error"] else float("nan")),
            **stats,
        }
        log_rows.append(row)
        _write_log_row(log_path, row)
        if update % ppo_cfg.checkpoint_every == 0:
            checkpoints.append(save(update, f"{update:05d}"))

    checkpoints.append(save(ppo_cfg.total_updates, "final"))
    return TrainResult(checkpoints=checkpoints, log_rows=log_rows,
                       final_policy=policy, final_critic=critic)


def train(method: MethodId, demos, env_cfg: EnvConfig, ppo_cfg: PpoConfig,
          out_dir: str) -> TrainResult:
    """Train one method on a demo set (list of trajectories or a DemoIndex)."""
    index = demos if isinstance(demos, DemoIndex) else DemoIndex(demos)
    envs = make_envs(MethodId(method), index, env_cfg, ppo_cfg.num_envs)
    return train_loop(envs, ppo_cfg, out_dir,
                      meta={"method": MethodId(method).value, "two_robot": False,
                            "category": env_cfg.object_category})


def train_two_robot(demos, env_cfg: EnvConfig, ppo_cfg: PpoConfig,
                    out_dir: str) -> TrainResult:
    """Centralized training of two robots on two-arm demonstrations."""
    index = demos if isinstance(demos, DemoIndex) else DemoIndex(demos)
    envs = [TwoRobotTaskEnv(env_cfg, index) for _ in range(ppo_cfg.num_envs)]
    return train_loop(envs, ppo_cfg, out_dir,
                      meta={"method": "chain", "two_robot": True,
                            "category": env_cfg.object_category})


def policy_from_checkpoint(path: str) -> tuple[PolicyNet, dict]:
    """Rebuild the policy (and its metadata) from a checkpoint file."""
    meta, arrays = load_checkpoint(path)
    rng = np.random.default_rng(0)
    policy = PolicyNet(meta["obs_dim"], meta["act_low"], meta["act_high"],
                       meta["hidden"], rng)
    n = meta["n_policy_params"]
    for p, a in zip(policy.params, arrays[:n]):
        p.value = a.astype(np.float64)
    return policy, meta
