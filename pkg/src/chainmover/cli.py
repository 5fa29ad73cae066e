"""Command-line entry point.

Subcommands: gen-demos, train, eval, plan, replay, bridge, plot-data. Every
run writes into its own directory (timestamp + seed under --out, or --run-name
for a fixed path) containing the fully resolved configuration, delimited
outputs, and rendered figures.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import datetime
import json
import os
import sys

from . import bridge as bridge_mod
from . import evaluation, plotting, rl
from .baselines import MethodId
from .demos import CATEGORY_COUNTS, DemoIndex, generate_demos, load_demos, save_demos
from .errors import ChainMoverError
from .geometry import Twist2
from .planner import GoalSpec, run_planner
from .sim import EnvConfig


def make_run_dir(out_root: str, command: str, seed: int,
                 run_name: str | None = None) -> str:
    if run_name:
        path = os.path.join(out_root, run_name)
    else:
        stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S")
        path = os.path.join(out_root, f"{stamp}-{command}-seed{seed}")
    os.makedirs(path, exist_ok=True)
    return path


def write_resolved(run_dir: str, args: argparse.Namespace, env_cfg: EnvConfig | None) -> None:
    """Record every flag value (and the env config) for reproducibility."""
    cp = configparser.ConfigParser()
    cp["run"] = {k: repr(v) for k, v in sorted(vars(args).items()) if k != "func"}
    with open(os.path.join(run_dir, "resolved.cfg"), "w") as f:
        cp.write(f)
    if env_cfg is not None:
        env_cfg.to_file(os.path.join(run_dir, "env.cfg"))


def _env_cfg(args: argparse.Namespace) -> EnvConfig:
    if getattr(args, "env_config", None):
        cfg = EnvConfig.from_file(args.env_config)
    else:
        cfg = EnvConfig()
    if getattr(args, "category", None):
        cfg.object_category = args.category
    cfg.rng_seed = args.seed
    cfg.validate()
    return cfg


def _load_index(demo_dir: str) -> DemoIndex:
    return DemoIndex(load_demos(demo_dir))


def _controller(args: argparse.Namespace):
    if args.controller == "oracle":
        return evaluation.perfect_twist_controller()
    return evaluation.controller_from_checkpoint(args.controller)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_gen_demos(args: argparse.Namespace) -> int:
    run_dir = make_run_dir(args.out, "gen-demos", args.seed, args.run_name)
    write_resolved(run_dir, args, None)
    trajs = []
    for cat in args.categories.split(","):
        cat = cat.strip()
        count = args.count if args.count else CATEGORY_COUNTS[cat]
        trajs.extend(generate_demos(cat, count, args.seed, arms=args.arms))
    demo_dir = os.path.join(run_dir, "demos")
    save_demos(trajs, demo_dir, args.seed)
    print(f"wrote {len(trajs)} demos to {demo_dir}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    env_cfg = _env_cfg(args)
    run_dir = make_run_dir(args.out, "train", args.seed, args.run_name)
    write_resolved(run_dir, args, env_cfg)
    index = _load_index(args.demos)
    ppo = rl.PpoConfig(
        num_envs=args.num_envs, rollout_len=args.rollout_len,
        total_updates=args.updates, seed=args.seed,
        hidden=tuple(int(h) for h in args.hidden.split(",")),
        lr=args.lr, entropy_coef=args.entropy_coef,
        checkpoint_every=args.checkpoint_every,
    )
    if args.two_robot:
        result = rl.train_two_robot(index, env_cfg, ppo, run_dir)
    else:
        result = rl.train(MethodId(args.method), index, env_cfg, ppo, run_dir)
    plotting.plot_training_curves(os.path.join(run_dir, "train_log.tsv"),
                                  os.path.join(run_dir, "train_curves.png"))
    print(f"final checkpoint: {result.checkpoints[-1]}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    env_cfg = _env_cfg(args)
    run_dir = make_run_dir(args.out, "eval", args.seed, args.run_name)
    write_resolved(run_dir, args, env_cfg)
    index = _load_index(args.demos)
    if args.suite == "metrics":
        controller = _controller(args)
        report = evaluation.metric_report(controller, env_cfg, index, seed=args.seed)
        evaluation.write_metric_report(run_dir, "metrics", report)
        plotting.plot_metric_bars(report.summary(),
                                  os.path.join(run_dir, "metrics.png"))
        print(json.dumps(report.summary(), sort_keys=True))
        return 0
    # sim-compare: mean tracking score per method over seeds x references.
    sources: dict[str, object] = {}
    for pair in args.checkpoints or []:
        name, _, path = pair.partition("=")
        if not path:
            raise SystemExit(f"--checkpoints entries must be method=path, got {pair!r}")
        sources[name] = path
    if args.controller == "oracle" and not sources:
        sources["oracle"] = evaluation.perfect_twist_controller()
    seeds = list(range(args.seed, args.seed + args.seeds))
    results = evaluation.compare_methods(sources, env_cfg, index, seeds,
                                         n_refs=args.n_refs)
    rows = [(m, r["mean"], r["std"], *r["per_seed"]) for m, r in results.items()]
    evaluation.write_table(
        os.path.join(run_dir, "compare.tsv"),
        ("method", "mean_v_track", "std_v_track",
         *(f"seed_{s}" for s in seeds)), rows)
    evaluation.write_summary(os.path.join(run_dir, "compare_summary.json"), results)
    plotting.plot_method_comparison(results, os.path.join(run_dir, "compare.png"))
    print(json.dumps({m: r["mean"] for m, r in results.items()}, sort_keys=True))
    return 0


def _load_goals(path: str) -> list[GoalSpec]:
    cp = configparser.ConfigParser()
    with open(path) as f:
        cp.read_file(f)
    goals = []
    for name in cp.sections():
        s = cp[name]
        goals.append(GoalSpec(float(s["x"]), float(s["y"]), float(s.get("yaw", 0.0)),
                              float(s.get("delta_xy", 0.1)),
                              float(s.get("delta_yaw", 0.1))))
    return goals


def cmd_plan(args: argparse.Namespace) -> int:
    env_cfg = _env_cfg(args)
    run_dir = make_run_dir(args.out, "plan", args.seed, args.run_name)
    write_resolved(run_dir, args, env_cfg)
    index = _load_index(args.demos)
    controller = _controller(args)
    goals = _load_goals(args.goals) if args.goals else [
        GoalSpec(args.goal_x, args.goal_y, args.goal_yaw)]
    rows = []
    for gi, goal in enumerate(goals):
        env = evaluation._eval_env(env_cfg, index)
        run = run_planner(env, controller, goal, seed=args.seed + gi,
                          max_steps=args.max_steps)
        rows.append((gi, goal.x, goal.y, goal.yaw, int(run.success),
                     run.sim_time, run.final_position_error,
                     run.final_heading_error))
        plotting.plot_trajectory(run.obj_poses, None,
                                 os.path.join(run_dir, f"goal_{gi:02d}.png"),
                                 goal=(goal.x, goal.y, goal.yaw))
    evaluation.write_table(
        os.path.join(run_dir, "plan_results.tsv"),
        ("goal", "x", "y", "yaw", "success", "sim_time",
         "final_pos_err", "final_yaw_err"), rows)
    n_ok = sum(r[4] for r in rows)
    print(f"{n_ok}/{len(rows)} goals reached; results in {run_dir}")
    return 0 if n_ok == len(rows) else 1


def cmd_replay(args: argparse.Namespace) -> int:
    index = _load_index(args.demos) if args.demos else None
    regenerated = bridge_mod.replay_log(args.log, index)
    recorded = bridge_mod.recorded_states(args.log)
    if len(recorded) != len(regenerated):
        print(f"length mismatch: {len(recorded)} recorded vs "
              f"{len(regenerated)} regenerated", file=sys.stderr)
        return 1
    for i, (a, b) in enumerate(zip(recorded, regenerated)):
        if a != b:
            print(f"divergence at state {i}", file=sys.stderr)
            return 1
    print(f"replay identical over {len(recorded)} states")
    return 0


def cmd_bridge(args: argparse.Namespace) -> int:
    env_cfg = _env_cfg(args)
    index = _load_index(args.demos)
    session = bridge_mod.SimSession(env_cfg, index, seed=args.seed,
                                    controller=args.controller,
                                    demo_dir=os.path.abspath(args.demos),
                                    record_path=args.record)
    server = bridge_mod.BridgeServer(session, host=args.host, port=args.port,
                                     pace=args.pace)
    server.start()
    print(f"bridge listening on ws://{args.host}:{server.port}/", flush=True)
    try:
        while True:
            import time
            time.sleep(1.0)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def cmd_plot_data(args: argparse.Namespace) -> int:
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    made = []
    if args.train_log:
        made.append(plotting.plot_training_curves(
            args.train_log, os.path.join(out_dir, "train_curves.png")))
    if args.summary:
        with open(args.summary) as f:
            summary = json.load(f)
        if "lin_cap" in summary:
            made.append(plotting.plot_metric_bars(
                summary, os.path.join(out_dir, "metrics.png")))
        else:
            made.append(plotting.plot_method_comparison(
                summary, os.path.join(out_dir, "compare.png")))
    if not made:
        raise SystemExit("nothing to plot: pass --train-log and/or --summary")
    for p in made:
        print(p)
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainmover",
        description="Planar object-moving: demos, training, metrics, planning, "
                    "and a live steering bridge.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, demos=True):
        p.add_argument("--out", default="runs", help="root directory for run outputs")
        p.add_argument("--run-name", default=None,
                       help="fixed run directory name (default: timestamp+seed)")
        p.add_argument("--seed", type=int, default=0, help="root random seed")
        if demos:
            p.add_argument("--demos", required=True,
                           help="directory of .demo files")
        p.add_argument("--env-config", default=None,
                       help="environment config file (sections env/randomization/grasp)")
        p.add_argument("--category", default=None,
                       choices=("chair", "table", "rack"),
                       help="object category override")

    p = sub.add_parser("gen-demos", help="synthesize demonstration files")
    p.add_argument("--out", default="runs")
    p.add_argument("--run-name", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--categories", default="chair",
                   help="comma-separated categories (chair,table,rack)")
    p.add_argument("--count", type=int, default=0,
                   help="demos per category (0 = category default)")
    p.add_argument("--arms", default="single",
                   choices=("single", "both-sym", "both-asym"))
    p.set_defaults(func=cmd_gen_demos)

    p = sub.add_parser("train", help="train one method with PPO")
    common(p)
    p.add_argument("--method", default="chain",
                   choices=[m.value for m in MethodId])
    p.add_argument("--two-robot", action="store_true",
                   help="centralized two-robot training on two-arm demos")
    p.add_argument("--updates", type=int, default=100)
    p.add_argument("--num-envs", type=int, default=16)
    p.add_argument("--rollout-len", type=int, default=64)
    p.add_argument("--hidden", default="64,64",
                   help="comma-separated hidden layer widths")
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--entropy-coef", type=float, default=0.003)
    p.add_argument("--checkpoint-every", type=int, default=25)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate controllers")
    common(p)
    p.add_argument("--suite", default="sim-compare",
                   choices=("sim-compare", "metrics"))
    p.add_argument("--controller", default="oracle",
                   help="'oracle' or a checkpoint path (metrics suite)")
    p.add_argument("--checkpoints", nargs="*", default=None, metavar="METHOD=PATH",
                   help="labeled checkpoints for sim-compare")
    p.add_argument("--seeds", type=int, default=5,
                   help="number of evaluation seeds (sim-compare)")
    p.add_argument("--n-refs", type=int, default=10,
                   help="reference trajectories per seed (sim-compare)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plan", help="run the waypoint planner headless")
    common(p)
    p.add_argument("--controller", default="oracle",
                   help="'oracle' or a checkpoint path")
    p.add_argument("--goals", default=None, help="goals config file")
    p.add_argument("--goal-x", type=float, default=3.0)
    p.add_argument("--goal-y", type=float, default=0.0)
    p.add_argument("--goal-yaw", type=float, default=0.0)
    p.add_argument("--max-steps", type=int, default=2400)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("replay", help="verify a recorded session log")
    p.add_argument("--log", required=True, help="session log path")
    p.add_argument("--demos", default=None,
                   help="demo directory (defaults to the one in the log header)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("bridge", help="serve the live steering session")
    common(p)
    p.add_argument("--controller", default="oracle",
                   help="'oracle' or a checkpoint path")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8770)
    p.add_argument("--pace", type=float, default=1.0,
                   help="real-time multiplier (0 = unpaced)")
    p.add_argument("--record", default=None, help="session log output path")
    p.set_defaults(func=cmd_bridge)

    p = sub.add_parser("plot-data", help="render figures from report files")
    p.add_argument("--out", default="plots")
    p.add_argument("--train-log", default=None, help="train_log.tsv path")
    p.add_argument("--summary", default=None,
                   help="metrics or comparison summary JSON")
    p.set_defaults(func=cmd_plot_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ChainMoverError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
