"""Tracking score and the simulation metric suite.

Metrics:
  lin_cap / ang_cap — highest commanded linear/angular object speed the
      controller sustains for 8 s in at least 4 of 5 seeded runs.
  div_rob — success rate at medium speed across an object-variant roster.
  ic_rob — success rate under perturbed grasp contact points.
  stt_con — endpoint position error after one 8 s constant-twist plan.
  mtt_con — tracking score over a 3-segment piecewise twist plan.

An episode succeeds when the grasp never severed, the robot body never
overlapped the object footprint, and the object covered at least half the
commanded displacement. All runs are seeded; reports carry their seeds so any
number can be recomputed exactly.

Controllers are callables (obs, env) -> action; see policy_controller and
perfect_twist_controller.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace as dc_replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import sim
from .baselines import MethodId
from .demos import DemoIndex
from .errors import SeriesMismatchError
from .geometry import Pose2, Twist2, rotate, wrap_angle
from .rl import MoverTaskEnv, policy_from_checkpoint
from .sim import NOMINAL_MASS, EnvConfig

YAW_LEN = 0.3
EIGHT_SECONDS_STEPS = 160       # 8 s at the 20 Hz control rate

Controller = Callable[[np.ndarray, MoverTaskEnv], np.ndarray]


# --------------------------------------------------------------------------
# Tracking score
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrackingScore:
    v_track: float
    errors: tuple
    meta: dict = field(default_factory=dict)


def tracking_score(rollout_poses: Sequence[Pose2], ref_poses: Sequence[Pose2],
                   yaw_len: float = YAW_LEN, include_yaw: bool = True,
                   meta: Optional[dict] = None) -> TrackingScore:
    """Mean of exp(-error_t) over the series; error is planar offset plus a
    length-scaled heading difference."""
    if len(rollout_poses) != len(ref_poses):
        raise SeriesMismatchError(
            f"series lengths differ: {len(rollout_poses)} vs {len(ref_poses)}")
    if not rollout_poses:
        raise SeriesMismatchError("empty pose series")
    errors = []
    for a, b in zip(rollout_poses, ref_poses):
        e = math.hypot(a.x - b.x, a.y - b.y)
        if include_yaw:
            e += yaw_len * abs(wrap_angle(a.yaw - b.yaw))
        errors.append(e)
    v = sum(math.exp(-e) for e in errors) / len(errors)
    return TrackingScore(v_track=v, errors=tuple(errors), meta=dict(meta or {}))


# --------------------------------------------------------------------------
# Controllers
# --------------------------------------------------------------------------

def policy_controller(policy) -> Controller:
    """Deterministic (mean-action) wrapper around a trained policy network."""
    def act(obs: np.ndarray, env: MoverTaskEnv) -> np.ndarray:
        return policy.act_deterministic(obs)
    return act


def controller_from_checkpoint(path: str) -> Controller:
    policy, _meta = policy_from_checkpoint(path)
    return policy_controller(policy)


def perfect_twist_controller(ramp_steps: int = 0) -> Controller:
    """Scripted executor that moves the root as a rigid extension of the
    commanded object motion and holds the arm. Optionally ramps the command
    over the first ramp_steps control steps."""
    def act(obs: np.ndarray, env: MoverTaskEnv) -> np.ndarray:
        world = env.world
        r = world.robot
        o = world.obj.pose
        tw = env.target.rotated(env.ref_pose.yaw)    # commanded twist, global
        scale = 1.0
        if ramp_steps > 0:
            scale = min(1.0, (env.steps + 1) / ramp_steps)
        vx = scale * (tw.vx - tw.omega * (r.root.y - o.y))
        vy = scale * (tw.vy + tw.omega * (r.root.x - o.x))
        lvx, lvy = rotate(-r.root.yaw, vx, vy)
        return np.array([lvx, lvy, scale * tw.omega, *r.arm_q])
    return act


def detaching_controller() -> Controller:
    """Degenerate controller that yanks the arm away; the grasp severs at once."""
    def act(obs: np.ndarray, env: MoverTaskEnv) -> np.ndarray:
        return np.array([-1.0, 0.0, 0.0, 2.6, 2.6, 2.6])
    return act


# --------------------------------------------------------------------------
# Episode rollout and the success criterion
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EpisodeResult:
    obj_poses: tuple
    ref_poses: tuple
    severed: bool
    overlapped: bool
    diverged: bool
    displacement: float
    commanded_displacement: float
    yaw_displacement: float
    commanded_yaw: float
    seed: int

    @property
    def success(self) -> bool:
        """Grasp held, no body overlap, and at least half the commanded motion."""
        if self.severed or self.overlapped or self.diverged:
            return False
        if self.commanded_displacement > 1e-9:
            if self.displacement < 0.5 * self.commanded_displacement:
                return False
        if self.commanded_yaw > 1e-9:
            if self.yaw_displacement < 0.5 * self.commanded_yaw:
                return False
        return True

    @property
    def final_position_error(self) -> float:
        a, b = self.obj_poses[-1], self.ref_poses[-1]
        return math.hypot(a.x - b.x, a.y - b.y)


def run_episode(env: MoverTaskEnv, controller: Controller, target: Twist2,
                seed: int, n_steps: int = EIGHT_SECONDS_STEPS,
                targets_by_step: Optional[dict] = None) -> EpisodeResult:
    """One seeded rollout against the commanded twist. targets_by_step swaps the
    command at given step indices (piecewise plans)."""
    obs = env.reset(seed, target=target)
    obj_poses = [env.world.obj.pose]
    ref_poses = [env.ref_pose]
    severed = False
    was_attached = env.world.attached()
    overlapped = sim.robot_object_overlap(env.world)
    diverged = False
    cum_yaw = 0.0
    commanded_dist = 0.0
    commanded_yaw = 0.0
    prev_yaw = env.world.obj.pose.yaw
    for t in range(n_steps):
        if targets_by_step and t in targets_by_step:
            env.target = targets_by_step[t]
        tgt = env.target
        obs, _r, done, info = env.step(controller(obs, env))
        if info.get("diverged"):
            diverged = True
            break
        commanded_dist += math.hypot(tgt.vx, tgt.vy) * env.cfg.control_dt
        commanded_yaw += abs(tgt.omega) * env.cfg.control_dt
        yaw = env.world.obj.pose.yaw
        cum_yaw += wrap_angle(yaw - prev_yaw)
        prev_yaw = yaw
        obj_poses.append(env.world.obj.pose)
        ref_poses.append(env.ref_pose)
        # Severing means losing a grasp once held; episodes that start detached
        # are not penalized for the approach phase before first contact.
        if info["breaks"] > 0 or (was_attached and not info["attached"]):
            severed = True
        was_attached = was_attached or info["attached"]
        if sim.robot_object_overlap(env.world):
            overlapped = True
        if done and t < n_steps - 1:
            break
    p0, p1 = obj_poses[0], obj_poses[-1]
    return EpisodeResult(
        obj_poses=tuple(obj_poses), ref_poses=tuple(ref_poses),
        severed=severed, overlapped=overlapped, diverged=diverged,
        displacement=math.hypot(p1.x - p0.x, p1.y - p0.y),
        commanded_displacement=commanded_dist,
        yaw_displacement=abs(cum_yaw), commanded_yaw=commanded_yaw,
        seed=seed,
    )


def _eval_env(env_cfg: EnvConfig, index: DemoIndex) -> MoverTaskEnv:
    cfg = dc_replace(env_cfg, episode_len=10 ** 9)   # length driven by the caller
    return MoverTaskEnv(cfg, index, MethodId.CHAIN, term_tracking_error=None)


# --------------------------------------------------------------------------
# Reference-trajectory tracking evaluation (method comparison protocol)
# --------------------------------------------------------------------------

def evaluate_tracking(controller: Controller, env_cfg: EnvConfig, index: DemoIndex,
                      n_refs: int = 10, seed: int = 0,
                      n_steps: int = EIGHT_SECONDS_STEPS,
                      env=None) -> list[TrackingScore]:
    """v_track over n_refs randomly sampled reference twists (seeded).

    env overrides the default single-robot episode environment (e.g. for
    two-robot policies); it must follow the task-environment interface."""
    env = env if env is not None else _eval_env(env_cfg, index)
    rng = np.random.default_rng([abs(seed), 101])
    scores = []
    for k in range(n_refs):
        target = index.sample_twist(rng)
        ep = run_episode(env, controller, target, seed * 10_007 + k, n_steps)
        scores.append(tracking_score(ep.obj_poses, ep.ref_poses,
                                     meta={"ref": k, "seed": ep.seed}))
    return scores


# --------------------------------------------------------------------------
# Capability search
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CapabilityResult:
    level: float
    axis: str
    no_stable_velocity: bool
    trials: dict            # level -> list of per-run success booleans
    runs_per_level: int
    seed: int


def _axis_target(axis: str, level: float) -> Twist2:
    if axis == "linear":
        return Twist2(level, 0.0, 0.0)
    if axis == "angular":
        return Twist2(0.0, 0.0, level)
    raise ValueError(f"axis must be 'linear' or 'angular', got {axis!r}")


def capability_search(controller: Controller, env_cfg: EnvConfig, index: DemoIndex,
                      axis: str = "linear", start: float = 0.5, step: float = 0.05,
                      runs: int = 5, need: int = 4, seed: int = 0,
                      max_level: float = 2.0) -> CapabilityResult:
    """Highest commanded speed sustained for 8 s in >= need of runs seeded
    episodes, searched from start in +-step moves."""
    env = _eval_env(env_cfg, index)
    trials: dict[float, list[bool]] = {}

    def stable(level: float) -> bool:
        key = round(level, 6)
        if key not in trials:
            outcomes = []
            for r in range(runs):
                ep = run_episode(env, controller, _axis_target(axis, level),
                                 seed * 100_003 + int(round(level * 1000)) * 101 + r)
                outcomes.append(ep.success)
            trials[key] = outcomes
        return sum(trials[key]) >= need

    k0 = int(round(start / step))
    if stable(start):
        k = k0
        while (k + 1) * step <= max_level + 1e-9 and stable((k + 1) * step):
            k += 1
        level = round(k * step, 6)
        return CapabilityResult(level, axis, False, trials, runs, seed)
    k = k0
    while k > 1 and not stable((k - 1) * step):
        k -= 1
    if k == 1:
        return CapabilityResult(0.0, axis, True, trials, runs, seed)
    return CapabilityResult(round((k - 1) * step, 6), axis, False, trials, runs, seed)


# --------------------------------------------------------------------------
# Robustness suite
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ObjectVariant:
    name: str
    category: str
    mass_scale: float
    mu_t: float


DEFAULT_VARIANTS = (
    ObjectVariant("chair-nominal", "chair", 1.0, 0.5),
    ObjectVariant("chair-heavy-slick", "chair", 3.0, 0.2),
    ObjectVariant("chair-light-grippy", "chair", 0.5, 0.8),
    ObjectVariant("table-nominal", "table", 1.0, 0.5),
    ObjectVariant("table-heavy", "table", 2.0, 0.3),
    ObjectVariant("rack-nominal", "rack", 1.0, 0.5),
    ObjectVariant("rack-slick", "rack", 1.0, 0.2),
)

MEDIUM_SPEED = 0.3
DIV_TRIALS_PER_VARIANT = 10
IC_ANCHOR_OFFSETS = (-0.05, 0.0, 0.05)
IC_TRIALS_PER_ANCHOR = 10


@dataclass(frozen=True)
class RobustnessResult:
    div_rob: float
    ic_rob: float
    div_trials: dict        # variant name -> list of success booleans
    ic_trials: dict         # anchor offset -> list of success booleans
    seed: int

    @property
    def div_trial_count(self) -> int:
        return sum(len(v) for v in self.div_trials.values())

    @property
    def ic_trial_count(self) -> int:
        return sum(len(v) for v in self.ic_trials.values())


def _variant_cfg(base: EnvConfig, v: ObjectVariant) -> EnvConfig:
    return dc_replace(
        base, object_category=v.category,
        nominal_mass=NOMINAL_MASS[v.category] * v.mass_scale,
        mass_scale_lo=1.0, mass_scale_hi=1.0,
        mu_t_lo=v.mu_t, mu_t_hi=v.mu_t,
    )


def robustness_suite(controller: Controller, env_cfg: EnvConfig, index: DemoIndex,
                     variants: Sequence[ObjectVariant] = DEFAULT_VARIANTS,
                     seed: int = 0) -> RobustnessResult:
    """Success rates over the object roster (medium speed) and over perturbed
    grasp anchors on the base object."""
    if not variants:
        raise ValueError("need at least one object variant")
    target = Twist2(MEDIUM_SPEED, 0.0, 0.0)
    div_trials = {}
    for vi, v in enumerate(variants):
        env = _eval_env(_variant_cfg(env_cfg, v), index)
        outcomes = []
        for r in range(DIV_TRIALS_PER_VARIANT):
            ep = run_episode(env, controller, target, seed * 7919 + vi * 131 + r)
            outcomes.append(ep.success)
        div_trials[v.name] = outcomes
    n = len(variants)
    div_rob = sum(sum(o) for o in div_trials.values()) / (DIV_TRIALS_PER_VARIANT * n)

    ic_trials = {}
    env = _eval_env(env_cfg, index)
    for ai, arc in enumerate(IC_ANCHOR_OFFSETS):
        env.approach_arc = arc
        outcomes = []
        for r in range(IC_TRIALS_PER_ANCHOR):
            ep = run_episode(env, controller, target, seed * 6007 + ai * 211 + r)
            outcomes.append(ep.success)
        ic_trials[arc] = outcomes
    env.approach_arc = 0.0
    ic_rob = sum(sum(o) for o in ic_trials.values()) / (
        len(IC_ANCHOR_OFFSETS) * IC_TRIALS_PER_ANCHOR)
    return RobustnessResult(div_rob, ic_rob, div_trials, ic_trials, seed)


# --------------------------------------------------------------------------
# Trajectory tracking (single- and multi-target plans)
# --------------------------------------------------------------------------

MULTI_PLAN = (
    (0, Twist2(0.3, 0.0, 0.0)),     # straight
    (60, Twist2(0.2, 0.0, 0.2)),    # arc
    (110, Twist2(0.0, 0.0, 0.3)),   # rotate in place
)
MULTI_PLAN_STEPS = 160


def trajectory_tracking(controller: Controller, env_cfg: EnvConfig, index: DemoIndex,
                        plan: str = "single", seed: int = 0) -> tuple[float, EpisodeResult]:
    """single -> (stt_con, episode): endpoint position error after one 8 s
    constant-twist plan. multi -> (mtt_con, episode): tracking score over the
    fixed 3-segment plan."""
    env = _eval_env(env_cfg, index)
    if plan == "single":
        ep = run_episode(env, controller, Twist2(MEDIUM_SPEED, 0.0, 0.0),
                         seed, EIGHT_SECONDS_STEPS)
        return ep.final_position_error, ep
    if plan == "multi":
        first = MULTI_PLAN[0][1]
        swaps = {t: tw for t, tw in MULTI_PLAN[1:]}
        ep = run_episode(env, controller, first, seed, MULTI_PLAN_STEPS,
                         targets_by_step=swaps)
        return tracking_score(ep.obj_poses, ep.ref_poses).v_track, ep
    raise ValueError(f"plan must be 'single' or 'multi', got {plan!r}")


# --------------------------------------------------------------------------
# Full metric report
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricReport:
    lin_cap: float
    ang_cap: float
    div_rob: float
    ic_rob: float
    stt_con: float
    mtt_con: float
    trial_counts: dict
    seed: int
    detail: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "lin_cap": self.lin_cap, "ang_cap": self.ang_cap,
            "div_rob": self.div_rob, "ic_rob": self.ic_rob,
            "stt_con": self.stt_con, "mtt_con": self.mtt_con,
            "trial_counts": self.trial_counts, "seed": self.seed,
        }


def metric_report(controller: Controller, env_cfg: EnvConfig, index: DemoIndex,
                  seed: int = 0,
                  variants: Sequence[ObjectVariant] = DEFAULT_VARIANTS) -> MetricReport:
    """Run the whole metric suite for one controller; deterministic per seed."""
    lin = capability_search(controller, env_cfg, index, "linear", seed=seed)
    ang = capability_search(controller, env_cfg, index, "angular", seed=seed)
    rob = robustness_suite(controller, env_cfg, index, variants, seed=seed)
    stt, _ = trajectory_tracking(controller, env_cfg, index, "single", seed=seed)
    mtt, _ = trajectory_tracking(controller, env_cfg, index, "multi", seed=seed)
    counts = {
        "capability_runs_per_level": lin.runs_per_level,
        "div_rob_trials": rob.div_trial_count,
        "div_rob_trials_per_variant": DIV_TRIALS_PER_VARIANT,
        "ic_rob_trials": rob.ic_trial_count,
    }
    detail = {
        "lin_cap_trials": {str(k): v for k, v in lin.trials.items()},
        "ang_cap_trials": {str(k): v for k, v in ang.trials.items()},
        "div_trials": rob.div_trials,
        "ic_trials": {str(k): v for k, v in rob.ic_trials.items()},
    }
    return MetricReport(lin.level, ang.level, rob.div_rob, rob.ic_rob,
                        stt, mtt, counts, seed, detail)


# --------------------------------------------------------------------------
# Report files
# --------------------------------------------------------------------------

def write_table(path: str, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    """Tab-delimited table with a header row."""
    with open(path, "w") as f:
        f.write("\t".join(columns) + "\n")
        for row in rows:
            f.write("\t".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def write_summary(path: str, summary: dict) -> None:
    with open(path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")


def write_metric_report(out_dir: str, name: str, report: MetricReport) -> None:
    os.makedirs(out_dir, exist_ok=True)
    rows = [
        ("lin_cap", report.lin_cap, report.trial_counts["capability_runs_per_level"]),
        ("ang_cap", report.ang_cap, report.trial_counts["capability_runs_per_level"]),
        ("div_rob", report.div_rob, report.trial_counts["div_rob_trials"]),
        ("ic_rob", report.ic_rob, report.trial_counts["ic_rob_trials"]),
        ("stt_con", report.stt_con, 1),
        ("mtt_con", report.mtt_con, 1),
    ]
    write_table(os.path.join(out_dir, f"{name}_metrics.tsv"),
                ("metric", "value", "trials"), rows)
    write_summary(os.path.join(out_dir, f"{name}_summary.json"),
                  {**report.summary(), "detail": report.detail})


def compare_methods(checkpoints: dict, env_cfg: EnvConfig, index: DemoIndex,
                    seeds: Sequence[int], n_refs: int = 10) -> dict:
    """Mean/std v_track per method over seeds x reference trajectories.

    checkpoints: method name -> checkpoint path (or a ready Controller)."""
    out: dict[str, dict] = {}
    for method, src in checkpoints.items():
        controller = src if callable(src) else controller_from_checkpoint(src)
        per_seed = []
        for s in seeds:
            scores = evaluate_tracking(controller, env_cfg, index,
                                       n_refs=n_refs, seed=s)
            per_seed.append(sum(t.v_track for t in scores) / len(scores))
        arr = np.asarray(per_seed)
        out[method] = {
            "per_seed": per_seed,
            "mean": float(arr.mean()),
            "std": float(arr.std(ddof=1)) if len(per_seed) > 1 else 0.0,
            "seeds": list(seeds),
            "n_refs": n_refs,
        }
    return out
