import filecmp
import json
import os
import subprocess
import sys

import pytest

from chainmover.bridge import SimSession, run_headless
from chainmover.cli import build_parser, main
from chainmover.demos import DemoIndex, load_demos
from chainmover.sim import EnvConfig


@pytest.fixture(scope="module")
def demo_dir(tmp_path_factory):
    root = str(tmp_path_factory.mktemp("cli"))
    assert main(["gen-demos", "--out", root, "--run-name", "demos",
                 "--seed", "0", "--count", "3"]) == 0
    return os.path.join(root, "demos", "demos")


def tree(path: str) -> list[str]:
    out = []
    for base, _dirs, files in os.walk(path):
        out.extend(os.path.relpath(os.path.join(base, f), path) for f in files)
    return sorted(out)


# --------------------------------------------------------------------------
# Parser surface
# --------------------------------------------------------------------------

def test_help_enumerates_subcommands(capsys):
    with pytest.raises(SystemExit) as e:
        build_parser().parse_args(["--help"])
    assert e.value.code == 0
    text = capsys.readouterr().out
    for cmd in ("gen-demos", "train", "eval", "plan", "replay", "bridge",
                "plot-data"):
        assert cmd in text


@pytest.mark.parametrize("cmd", ["gen-demos", "train", "eval", "plan",
                                 "replay", "bridge", "plot-data"])
def test_subcommand_help_lists_flags(cmd, capsys):
    with pytest.raises(SystemExit) as e:
        build_parser().parse_args([cmd, "--help"])
    assert e.value.code == 0
    text = capsys.readouterr().out
    assert "--seed" in text or cmd in ("replay", "plot-data")


def test_unknown_method_rejected(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        build_parser().parse_args(["train", "--demos", "x", "--method", "sota"])
    assert e.value.code == 2


# --------------------------------------------------------------------------
# gen-demos
# --------------------------------------------------------------------------

def test_gen_demos_outputs_and_determinism(tmp_path):
    for name in ("a", "b"):
        assert main(["gen-demos", "--out", str(tmp_path), "--run-name", name,
                     "--seed", "3", "--count", "2"]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    assert (a / "resolved.cfg").exists()
    files = tree(str(a / "demos"))
    assert files == tree(str(b / "demos"))
    assert any(f.endswith(".demo") for f in files)
    assert "manifest.cfg" in files or any("manifest" in f for f in files)
    for f in files:
        assert filecmp.cmp(str(a / "demos" / f), str(b / "demos" / f),
                           shallow=False), f
    # the demos are loadable through the public reader
    assert len(load_demos(str(a / "demos"))) == 2


# --------------------------------------------------------------------------
# train
# --------------------------------------------------------------------------

TRAIN_FLAGS = ["--updates", "2", "--num-envs", "2", "--rollout-len", "8",
               "--hidden", "8", "--checkpoint-every", "1"]


def test_train_run_dir_contains_everything(tmp_path, demo_dir):
    for name in ("t1", "t2"):
        assert main(["train", "--out", str(tmp_path), "--run-name", name,
                     "--seed", "1", "--demos", demo_dir, "--method", "rl",
                     *TRAIN_FLAGS]) == 0
    d = tmp_path / "t1"
    files = tree(str(d))
    assert "resolved.cfg" in files
    assert "env.cfg" in files
    assert "train_log.tsv" in files
    assert "checkpoint_final.ckpt" in files
    assert "train_curves.png" in files  # figure rendered alongside the table
    # twice with the same seed: identical logs and checkpoints
    assert filecmp.cmp(str(d / "train_log.tsv"),
                       str(tmp_path / "t2" / "train_log.tsv"), shallow=False)
    assert filecmp.cmp(str(d / "checkpoint_final.ckpt"),
                       str(tmp_path / "t2" / "checkpoint_final.ckpt"),
                       shallow=False)


# --------------------------------------------------------------------------
# eval (sim-compare suite)
# --------------------------------------------------------------------------

def test_eval_sim_compare_oracle(tmp_path, demo_dir, capsys):
    assert main(["eval", "--out", str(tmp_path), "--run-name", "cmp",
                 "--seed", "0", "--demos", demo_dir, "--suite", "sim-compare",
                 "--seeds", "2", "--n-refs", "2"]) == 0
    printed = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert "oracle" in printed
    d = tmp_path / "cmp"
    rows = (d / "compare.tsv").read_text().splitlines()
    assert rows[0].split("\t")[:3] == ["method", "mean_v_track", "std_v_track"]
    assert len(rows) == 2
    summary = json.loads((d / "compare_summary.json").read_text())
    assert len(summary["oracle"]["per_seed"]) == 2
    assert (d / "compare.png").exists()


def test_eval_bad_checkpoint_spec(tmp_path, demo_dir):
    with pytest.raises(SystemExit):
        main(["eval", "--out", str(tmp_path), "--run-name", "bad",
              "--demos", demo_dir, "--checkpoints", "no-equals-sign"])


# --------------------------------------------------------------------------
# plan
# --------------------------------------------------------------------------

def test_plan_reaches_straight_goal(tmp_path, demo_dir, capsys):
    cfg = EnvConfig(obj_xy_jitter=0.0, obj_yaw_jitter=0.0, mass_scale_lo=1.0,
                    mass_scale_hi=1.0, mu_t_lo=0.3, mu_t_hi=0.3,
                    root_offset=0.0)
    cfg_path = str(tmp_path / "env.cfg")
    cfg.to_file(cfg_path)
    start_x = cfg.nominal_object_x()
    assert main(["plan", "--out", str(tmp_path), "--run-name", "p",
                 "--seed", "0", "--demos", demo_dir, "--env-config", cfg_path,
                 "--goal-x", f"{start_x + 1.0}", "--goal-y", "0.0",
                 "--goal-yaw", "0.0"]) == 0
    assert "1/1 goals reached" in capsys.readouterr().out
    d = tmp_path / "p"
    rows = (d / "plan_results.tsv").read_text().splitlines()
    assert rows[0].startswith("goal\t")
    assert rows[1].split("\t")[4] == "1"  # success flag
    assert (d / "goal_00.png").exists()  # trajectory figure beside the table


# --------------------------------------------------------------------------
# replay
# --------------------------------------------------------------------------

def test_replay_verifies_recorded_session(tmp_path, demo_dir, capsys):
    log = str(tmp_path / "session.log")
    session = SimSession(EnvConfig(), DemoIndex(load_demos(demo_dir)),
                         seed=2, controller="oracle", demo_dir=demo_dir,
                         record_path=log)
    run_headless(session, {1: [{"type": "set_target_twist", "vx": 0.2,
                                "vy": 0.0, "omega": 0.0}]}, 15)
    session.close()
    assert main(["replay", "--log", log]) == 0
    assert "replay identical over 15 states" in capsys.readouterr().out


def test_replay_missing_log_is_reported(tmp_path, capsys):
    assert main(["replay", "--log", str(tmp_path / "nope.log")]) == 2
    assert "error:" in capsys.readouterr().err


# --------------------------------------------------------------------------
# plot-data and the installed entry point
# --------------------------------------------------------------------------

def test_plot_data_from_train_log(tmp_path, demo_dir):
    assert main(["train", "--out", str(tmp_path), "--run-name", "t",
                 "--seed", "0", "--demos", demo_dir, "--method", "rl",
                 *TRAIN_FLAGS]) == 0
    out = str(tmp_path / "figs")
    assert main(["plot-data", "--out", out,
                 "--train-log", str(tmp_path / "t" / "train_log.tsv")]) == 0
    assert os.path.exists(os.path.join(out, "train_curves.png"))
    with pytest.raises(SystemExit):
        main(["plot-data", "--out", out])


def test_console_entry_point_smoke():
    out = subprocess.run([sys.executable, "-m", "chainmover.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "gen-demos" in out.stdout
