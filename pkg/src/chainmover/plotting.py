"""Figure rendering for training logs, method comparisons, metric reports, and
object trajectories. Every report-producing CLI path calls into here so each
delimited output file has a figure next to it."""
from __future__ import annotations

import math
import os
from typing import Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, out_path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    fig.savefig(out_path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return out_path


def read_train_log(path: str) -> dict[str, list[float]]:
    """Parse a tab-delimited training log into column lists."""
    with open(path) as f:
        header = f.readline().rstrip("\n").split("\t")
        cols: dict[str, list[float]] = {h: [] for h in header}
        for line in f:
            for h, v in zip(header, line.rstrip("\n").split("\t")):
                cols[h].append(float(v))
    return cols


def plot_training_curves(log_path: str, out_path: str) -> str:
    cols = read_train_log(log_path)
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
    x = cols["update"]
    axes[0].plot(x, cols["mean_return"])
    axes[0].set_title("mean return")
    axes[1].plot(x, cols["mean_reward"])
    axes[1].set_title("mean step reward")
    track = cols.get("mean_tracking_error", [])
    axes[2].plot(x, track)
    axes[2].set_title("mean tracking error")
    for ax in axes:
        ax.set_xlabel("update")
        ax.grid(True, alpha=0.3)
    return _save(fig, out_path)


def plot_method_comparison(results: Mapping[str, Mapping], out_path: str) -> str:
    """Bar chart of mean v_track with one-std error bars per method."""
    names = list(results)
    means = [results[n]["mean"] for n in names]
    stds = [results[n].get("std", 0.0) for n in names]
    fig, ax = plt.subplots(figsize=(1.2 * len(names) + 2, 3.5))
    ax.bar(range(len(names)), means, yerr=stds, capsize=4, color="#4878a8")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20)
    ax.set_ylabel("tracking score")
    ax.set_ylim(0, 1.05)
    ax.grid(True, axis="y", alpha=0.3)
    return _save(fig, out_path)


def plot_metric_bars(summary: Mapping[str, float], out_path: str) -> str:
    keys = ("lin_cap", "ang_cap", "div_rob", "ic_rob", "stt_con", "mtt_con")
    vals = [float(summary.get(k, float("nan"))) for k in keys]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.bar(range(len(keys)), vals, color="#6a9a58")
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, rotation=20)
    ax.grid(True, axis="y", alpha=0.3)
    return _save(fig, out_path)


def plot_trajectory(obj_poses: Sequence, ref_poses: Optional[Sequence],
                    out_path: str, goal: Optional[tuple] = None) -> str:
    """Top-down object path (and reference path / goal marker when given)."""
    fig, ax = plt.subplots(figsize=(5, 5))
    xs = [p.x for p in obj_poses]
    ys = [p.y for p in obj_poses]
    ax.plot(xs, ys, "-", color="#333333", label="object")
    ax.plot(xs[0], ys[0], "o", color="#333333")
    if ref_poses is not None:
        ax.plot([p.x for p in ref_poses], [p.y for p in ref_poses],
                "--", color="#b0604a", label="reference")
    if goal is not None:
        gx, gy = goal[0], goal[1]
        ax.plot(gx, gy, "*", markersize=14, color="#b08a2a", label="goal")
        if len(goal) > 2:
            ax.arrow(gx, gy, 0.3 * math.cos(goal[2]), 0.3 * math.sin(goal[2]),
                     head_width=0.08, color="#b08a2a")
    ax.set_aspect("equal")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, out_path)
