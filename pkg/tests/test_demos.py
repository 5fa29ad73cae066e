import math

import numpy as np
import pytest

from chainmover.demos import (DEMO_DT, DemoIndex, TWIST_RTOL, generate_demo,
                              generate_demos, load_demo, load_demos,
                              morphology_gap, nearest_demo_frame, save_demo,
                              save_demos)
from chainmover.errors import (DemoKinematicsError, DemoParseError,
                               EmptyDemoIndexError)
from chainmover.geometry import Twist2, norm2, rotate, wrap_angle
from chainmover.sim import FOOTPRINT_RADIUS


@pytest.fixture(scope="module")
def demos():
    return generate_demos("chair", 4, seed=0)


def test_generator_deterministic(demos):
    again = generate_demos("chair", 4, seed=0)
    assert demos == again


def test_generator_seed_sensitivity(demos):
    other = generate_demos("chair", 4, seed=1)
    assert other != demos


def test_round_trip(tmp_path, demos):
    p = tmp_path / "d.demo"
    save_demo(demos[0], str(p))
    back = load_demo(str(p))
    assert back.object_category == demos[0].object_category
    assert len(back.frames) == len(demos[0].frames)
    for a, b in zip(back.frames, demos[0].frames):
        assert a.object_pose.x == b.object_pose.x
        assert a.object_pose.yaw == b.object_pose.yaw
        assert a.object_twist == b.object_twist
        assert a.contact == b.contact
        for arm in b.keypoints:
            assert a.keypoints[arm].wrist == b.keypoints[arm].wrist
            assert a.keypoints[arm].elbow == b.keypoints[arm].elbow


def test_save_demos_manifest(tmp_path, demos):
    save_demos(list(demos), str(tmp_path), seed=0)
    back = load_demos(str(tmp_path))
    assert len(back) == len(demos)
    assert (tmp_path / "manifest.cfg").exists()
    text = (tmp_path / "manifest.cfg").read_text()
    assert "count_chair = 4" in text


def test_wrist_on_boundary(demos):
    r = FOOTPRINT_RADIUS["chair"]
    for fr in demos[0].frames:
        for kp in fr.keypoints.values():
            d = norm2(kp.wrist[0] - fr.object_pose.x, kp.wrist[1] - fr.object_pose.y)
            assert d == pytest.approx(r, abs=1e-9)


def test_human_links_respected(demos):
    from chainmover.demos import HUMAN_LINKS, SHOULDER_OFFSET
    for fr in demos[0].frames[::7]:
        for kp in fr.keypoints.values():
            l1 = norm2(kp.elbow[0] - kp.shoulder[0], kp.elbow[1] - kp.shoulder[1])
            l2 = norm2(kp.wrist[0] - kp.elbow[0], kp.wrist[1] - kp.elbow[1])
            assert l1 == pytest.approx(HUMAN_LINKS[0], abs=1e-6)
            assert l2 == pytest.approx(HUMAN_LINKS[1], abs=1e-6)
            off = norm2(kp.shoulder[0] - kp.agent_root[0],
                        kp.shoulder[1] - kp.agent_root[1])
            assert off == pytest.approx(SHOULDER_OFFSET, abs=1e-9)


def test_stored_twists_match_finite_difference(demos):
    for traj in demos:
        for a, b in zip(traj.frames, traj.frames[1:]):
            fd = ((b.object_pose.x - a.object_pose.x) / DEMO_DT,
                  (b.object_pose.y - a.object_pose.y) / DEMO_DT,
                  wrap_angle(b.object_pose.yaw - a.object_pose.yaw) / DEMO_DT)
            mag = max(norm2(fd[0], fd[1]), abs(fd[2]))
            if mag <= 0.05:
                continue
            stored = (a.object_twist.vx, a.object_twist.vy, a.object_twist.omega)
            err = max(abs(f - s) for f, s in zip(fd, stored))
            assert err <= TWIST_RTOL * mag


def test_two_arm_variants():
    sym = generate_demo("table", 0, 0, arms="both-sym")
    asym = generate_demo("table", 0, 0, arms="both-asym")
    assert sym.arms == ("left", "right")
    assert asym.arms == ("left", "right")
    assert sym.frames[0].dominant_arm == "both"
    # the two variants script different grasp placements
    assert sym.frames[0].keypoints["right"].wrist \
        != asym.frames[0].keypoints["right"].wrist


def test_morphology_gap_positive():
    assert morphology_gap() > 0.01


def test_load_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.demo"
    p.write_text("notademo 1 chair 0.05 left left tag\n")
    with pytest.raises(DemoParseError):
        load_demo(str(p))


def test_load_rejects_bad_version(tmp_path, demos):
    p = tmp_path / "v.demo"
    save_demo(demos[0], str(p))
    lines = p.read_text().splitlines()
    lines[0] = lines[0].replace("icdemo 1", "icdemo 2", 1)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DemoParseError):
        load_demo(str(p))


def test_load_rejects_short_trajectory(tmp_path, demos):
    p = tmp_path / "short.demo"
    save_demo(demos[0], str(p))
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:10]) + "\n")
    with pytest.raises(DemoParseError):
        load_demo(str(p))


def test_load_rejects_inconsistent_twist(tmp_path, demos):
    p = tmp_path / "ktw.demo"
    save_demo(demos[0], str(p))
    lines = p.read_text().splitlines()
    # corrupt the stored twist on a mid-trajectory frame
    toks = lines[20].split()
    toks[7] = repr(float(toks[7]) + 5.0)
    lines[20] = " ".join(toks)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DemoKinematicsError):
        load_demo(str(p))


# --------------------------------------------------------------------------
# Nearest-frame index
# --------------------------------------------------------------------------

def test_index_linear_scan_oracle(demos):
    idx = DemoIndex(demos)
    yl = idx.yaw_len
    rng = np.random.default_rng(4)
    for _ in range(50):
        target = Twist2(*rng.uniform(-0.6, 0.6, size=3))
        fr, chain = idx.nearest(target)
        # brute-force scan over all contact frames, twists in object-plane frame
        best = None
        for traj in demos:
            for f in traj.frames:
                for a in f.keypoints:
                    if not f.contact[a]:
                        continue
                    vx, vy = rotate(-f.object_pose.yaw, f.object_twist.vx,
                                    f.object_twist.vy)
                    d = ((vx - target.vx) ** 2 + (vy - target.vy) ** 2
                         + (yl * (f.object_twist.omega - target.omega)) ** 2)
                    if best is None or d < best[0]:
                        best = (d, f)
        vx, vy = rotate(-fr.object_pose.yaw, fr.object_twist.vx,
                        fr.object_twist.vy)
        got = ((vx - target.vx) ** 2 + (vy - target.vy) ** 2
               + (yl * (fr.object_twist.omega - target.omega)) ** 2)
        assert got == pytest.approx(best[0], abs=1e-12)


def test_index_exact_twist_recovers_frame(demos):
    idx = DemoIndex(demos)
    fr = demos[0].frames[15]
    vx, vy = rotate(-fr.object_pose.yaw, fr.object_twist.vx, fr.object_twist.vy)
    got, _ = idx.nearest(Twist2(vx, vy, fr.object_twist.omega))
    gvx, gvy = rotate(-got.object_pose.yaw, got.object_twist.vx,
                      got.object_twist.vy)
    assert (gvx, gvy, got.object_twist.omega) == pytest.approx(
        (vx, vy, fr.object_twist.omega), abs=1e-12)


def test_index_arm_filter():
    sym = [generate_demo("table", 0, i, arms="both-sym") for i in range(2)]
    both = DemoIndex(sym)
    left = DemoIndex(sym, arm="left")
    assert len(both) == 2 * len(left)
    with pytest.raises(EmptyDemoIndexError):
        DemoIndex(sym, arm="tail")


def test_nearest_demo_frame_helper(demos):
    fr, chain = nearest_demo_frame(demos, Twist2(0.2, 0.0, 0.0))
    assert chain.segments  # prebuilt chain comes back with the frame
