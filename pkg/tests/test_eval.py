import math

import numpy as np
import pytest

from chainmover.demos import DemoIndex, generate_demos
from chainmover.errors import SeriesMismatchError
from chainmover.evaluation import (DEFAULT_VARIANTS, DIV_TRIALS_PER_VARIANT,
                                   IC_ANCHOR_OFFSETS, IC_TRIALS_PER_ANCHOR,
                                   MEDIUM_SPEED, CapabilityResult,
                                   capability_search, compare_methods,
                                   detaching_controller, evaluate_tracking,
                                   metric_report, perfect_twist_controller,
                                   robustness_suite, run_episode,
                                   tracking_score, trajectory_tracking,
                                   write_metric_report, _eval_env)
from chainmover.geometry import Pose2, Twist2
from chainmover.sim import EnvConfig


@pytest.fixture(scope="module")
def index():
    return DemoIndex(generate_demos("chair", 3, seed=0))


def pinned_cfg(**kw) -> EnvConfig:
    base = dict(obj_xy_jitter=0.0, obj_yaw_jitter=0.0, mass_scale_lo=1.0,
                mass_scale_hi=1.0, mu_t_lo=0.4, mu_t_hi=0.4, root_offset=0.0,
                breakaway_force=85.0)
    base.update(kw)
    return EnvConfig(**base)


# --------------------------------------------------------------------------
# Tracking score
# --------------------------------------------------------------------------

def test_tracking_score_constant_offset():
    ref = [Pose2(float(i), 0.0, 0.0) for i in range(10)]
    off = [Pose2(float(i) + 1.0, 0.0, 0.0) for i in range(10)]
    s = tracking_score(off, ref)
    assert s.v_track == pytest.approx(math.exp(-1.0), abs=1e-12)
    assert all(e == pytest.approx(1.0) for e in s.errors)


def test_tracking_score_perfect_is_one():
    ref = [Pose2(0.1 * i, 0.0, 0.2) for i in range(5)]
    assert tracking_score(ref, ref).v_track == pytest.approx(1.0, abs=1e-12)


def test_tracking_score_yaw_weight():
    a = [Pose2(0, 0, 1.0)]
    b = [Pose2(0, 0, 0.0)]
    assert tracking_score(a, b).v_track == pytest.approx(math.exp(-0.3), abs=1e-12)
    assert tracking_score(a, b, include_yaw=False).v_track == pytest.approx(1.0)


def test_tracking_score_series_validation():
    with pytest.raises(SeriesMismatchError):
        tracking_score([Pose2(0, 0, 0)], [])
    with pytest.raises(SeriesMismatchError):
        tracking_score([], [])


# --------------------------------------------------------------------------
# Episode rollout / success criterion
# --------------------------------------------------------------------------

def test_oracle_episode_succeeds(index):
    env = _eval_env(pinned_cfg(), index)
    ep = run_episode(env, perfect_twist_controller(ramp_steps=10),
                     Twist2(0.3, 0.0, 0.0), seed=0)
    assert ep.success
    assert not ep.severed and not ep.overlapped
    assert ep.displacement == pytest.approx(ep.commanded_displacement, rel=0.15)
    assert ep.final_position_error < 0.15


def test_detaching_episode_fails(index):
    env = _eval_env(pinned_cfg(), index)
    ep = run_episode(env, detaching_controller(), Twist2(0.3, 0.0, 0.0), seed=0)
    assert ep.severed
    assert not ep.success
    # the object barely moves while the reference covers the full plan
    assert ep.displacement < 0.3
    assert ep.commanded_displacement == pytest.approx(0.3 * 8.0, abs=1e-9)
    assert ep.final_position_error > 1.5


def test_oracle_tracks_references_well(index):
    scores = evaluate_tracking(perfect_twist_controller(ramp_steps=10),
                               pinned_cfg(), index, n_refs=5, seed=0)
    assert len(scores) == 5
    assert np.mean([s.v_track for s in scores]) > 0.7


def test_evaluate_tracking_deterministic(index):
    con = perfect_twist_controller(ramp_steps=10)
    a = evaluate_tracking(con, pinned_cfg(), index, n_refs=3, seed=5)
    b = evaluate_tracking(con, pinned_cfg(), index, n_refs=3, seed=5)
    assert [s.v_track for s in a] == [s.v_track for s in b]
    assert [s.errors for s in a] == [s.errors for s in b]


# --------------------------------------------------------------------------
# Capability search
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def lin_cap(index) -> CapabilityResult:
    return capability_search(perfect_twist_controller(ramp_steps=10),
                             pinned_cfg(), index, "linear", seed=0,
                             max_level=1.2)


def test_capability_protocol(lin_cap):
    assert lin_cap.runs_per_level == 5
    assert all(len(v) == 5 for v in lin_cap.trials.values())
    assert not lin_cap.no_stable_velocity
    # the returned level is the highest tried level with >= 4/5 successes
    passed = [lvl for lvl, v in lin_cap.trials.items() if sum(v) >= 4]
    assert lin_cap.level == pytest.approx(max(passed))
    above = round(lin_cap.level + 0.05, 6)
    if above in lin_cap.trials:
        assert sum(lin_cap.trials[above]) < 4


def test_capability_deterministic(index, lin_cap):
    again = capability_search(perfect_twist_controller(ramp_steps=10),
                              pinned_cfg(), index, "linear", seed=0,
                              max_level=1.2)
    assert again.level == lin_cap.level
    assert again.trials == lin_cap.trials


def test_capability_monotone_in_breakaway(index, lin_cap):
    """A weaker grasp cannot sustain a higher speed."""
    weaker = capability_search(perfect_twist_controller(ramp_steps=10),
                               pinned_cfg(breakaway_force=50.0), index,
                               "linear", seed=0, max_level=1.2)
    assert weaker.level <= lin_cap.level


def test_capability_zero_when_grasp_cannot_hold_friction(index):
    """Breakaway below the static friction force mu*m*g: no speed is stable."""
    cfg = pinned_cfg(breakaway_force=35.0)  # mu*m*g = 39.2 N
    r = capability_search(perfect_twist_controller(ramp_steps=10), cfg, index,
                          "linear", seed=0, max_level=0.6)
    assert r.no_stable_velocity
    assert r.level == 0.0


def test_capability_axis_validation(index):
    with pytest.raises(ValueError):
        capability_search(perfect_twist_controller(), pinned_cfg(), index,
                          axis="sideways")


# --------------------------------------------------------------------------
# Robustness suite
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def oracle_robustness(index):
    return robustness_suite(perfect_twist_controller(ramp_steps=10),
                            pinned_cfg(), index, seed=0)


def test_robustness_trial_counts(oracle_robustness):
    r = oracle_robustness
    assert r.div_trial_count == len(DEFAULT_VARIANTS) * DIV_TRIALS_PER_VARIANT
    assert all(len(v) == DIV_TRIALS_PER_VARIANT for v in r.div_trials.values())
    assert r.ic_trial_count == len(IC_ANCHOR_OFFSETS) * IC_TRIALS_PER_ANCHOR
    assert set(r.ic_trials) == set(IC_ANCHOR_OFFSETS)
    assert 0.0 <= r.div_rob <= 1.0
    assert 0.0 <= r.ic_rob <= 1.0


def test_robustness_rates_match_trials(oracle_robustness):
    r = oracle_robustness
    div = sum(sum(v) for v in r.div_trials.values()) / r.div_trial_count
    ic = sum(sum(v) for v in r.ic_trials.values()) / r.ic_trial_count
    assert r.div_rob == pytest.approx(div, abs=1e-12)
    assert r.ic_rob == pytest.approx(ic, abs=1e-12)


def test_detaching_controller_scores_zero_robustness(index):
    r = robustness_suite(detaching_controller(), pinned_cfg(), index,
                         variants=DEFAULT_VARIANTS[:1], seed=0)
    assert r.div_rob == 0.0
    assert r.ic_rob == 0.0


# --------------------------------------------------------------------------
# Trajectory tracking plans
# --------------------------------------------------------------------------

def test_single_plan_oracle_and_detach(index):
    stt, ep = trajectory_tracking(perfect_twist_controller(ramp_steps=10),
                                  pinned_cfg(), index, "single", seed=0)
    assert ep.success
    assert stt < 0.15
    stt_d, ep_d = trajectory_tracking(detaching_controller(), pinned_cfg(),
                                      index, "single", seed=0)
    # the object never follows: endpoint error equals the full commanded travel
    assert stt_d == pytest.approx(MEDIUM_SPEED * 8.0, abs=0.1)


def test_multi_plan_oracle(index):
    mtt, ep = trajectory_tracking(perfect_twist_controller(ramp_steps=10),
                                  pinned_cfg(), index, "multi", seed=0)
    assert 0.5 < mtt <= 1.0
    assert len(ep.obj_poses) == 161


def test_plan_name_validation(index):
    with pytest.raises(ValueError):
        trajectory_tracking(perfect_twist_controller(), pinned_cfg(), index,
                            plan="triple")


# --------------------------------------------------------------------------
# Report files and method comparison
# --------------------------------------------------------------------------

def test_write_metric_report_files(tmp_path, index, oracle_robustness):
    # assemble a report without re-running the expensive suites
    from chainmover.evaluation import MetricReport
    rep = MetricReport(lin_cap=0.5, ang_cap=0.6,
                       div_rob=oracle_robustness.div_rob,
                       ic_rob=oracle_robustness.ic_rob,
                       stt_con=0.1, mtt_con=0.9,
                       trial_counts={"capability_runs_per_level": 5,
                                     "div_rob_trials": 70,
                                     "div_rob_trials_per_variant": 10,
                                     "ic_rob_trials": 30},
                       seed=0)
    write_metric_report(str(tmp_path), "oracle", rep)
    table = (tmp_path / "oracle_metrics.tsv").read_text().splitlines()
    assert table[0] == "metric\tvalue\ttrials"
    names = [line.split("\t")[0] for line in table[1:]]
    assert names == ["lin_cap", "ang_cap", "div_rob", "ic_rob", "stt_con", "mtt_con"]
    import json
    summary = json.loads((tmp_path / "oracle_summary.json").read_text())
    assert summary["trial_counts"]["div_rob_trials"] == 70
    assert summary["trial_counts"]["ic_rob_trials"] == 30


def test_compare_methods_with_controllers(index):
    out = compare_methods(
        {"oracle": perfect_twist_controller(ramp_steps=10),
         "detach": detaching_controller()},
        pinned_cfg(), index, seeds=[0, 1], n_refs=2)
    assert set(out) == {"oracle", "detach"}
    for stats in out.values():
        assert len(stats["per_seed"]) == 2
        assert stats["n_refs"] == 2
    assert out["oracle"]["mean"] > out["detach"]["mean"]
