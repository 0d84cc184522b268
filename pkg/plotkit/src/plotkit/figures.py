"""The three figure types, rendered deterministically.

Color language: references in red (path) and yellow (footholds), optimized
results in green (path) and orange (footholds). Output format follows the
file extension (SVG/PDF vector, PNG raster); identical inputs produce
identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import LogBundle, SchemaError

__all__ = ["plot_tracking", "plot_terrain_scenario", "plot_multi_robot", "apply_style"]

REF_PATH = "#d62728"  # red
REF_FOOT = "#e6c229"  # yellow
EXEC_PATH = "#2ca02c"  # green
OPT_FOOT = "#ff7f0e"  # orange

_DETERMINISTIC_RC = {
    "svg.hashsalt": "plotkit",
    "figure.max_open_warning": 0,
    "path.simplify": False,
}


def apply_style(style_file: str | None = None):
    plt.rcParams.update(_DETERMINISTIC_RC)
    if style_file:
        plt.style.use(style_file)
        plt.rcParams.update(_DETERMINISTIC_RC)


def _save(fig, out_path: str | Path):
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"Date": None} if out_path.suffix.lower() == ".svg" else None
    fig.savefig(out_path, metadata=meta)
    plt.close(fig)
    return out_path


def plot_tracking(bundle: LogBundle, out_path: str | Path,
                  style_file: str | None = None) -> Path:
    """Overhead and side view: paths, footholds, push instants."""
    apply_style(style_file)
    traj = bundle.trajectory
    pos = traj.positions()
    ref = bundle.reference_path()
    feet_opt, feet_ref = bundle.executed_footholds()

    fig, (ax_top, ax_side) = plt.subplots(
        2, 1, figsize=(7.0, 7.5), height_ratios=[2.2, 1.0]
    )
    ax_top.plot(ref[:, 1], ref[:, 2], color=REF_PATH, lw=1.6, label="reference path")
    ax_top.plot(pos[:, 0], pos[:, 1], color=EXEC_PATH, lw=1.6, label="executed path")
    if len(feet_ref):
        ax_top.scatter(feet_ref[:, 0], feet_ref[:, 1], s=34, facecolors="none",
                       edgecolors=REF_FOOT, lw=1.4, label="reference footholds")
        ax_top.scatter(feet_opt[:, 0], feet_opt[:, 1], s=20, color=OPT_FOOT,
                       label="optimized footholds")
    ax_top.set_xlabel("x [m]")
    ax_top.set_ylabel("y [m]")
    ax_top.set_aspect("equal", adjustable="datalim")
    ax_top.legend(loc="best", fontsize=8)
    ax_top.set_title(f"{bundle.summary.get('scenario', 'run')}: overhead")

    t = traj["t"]
    ax_side.plot(t, pos[:, 2], color=EXEC_PATH, lw=1.4, label="base height")
    ax_side.plot(ref[:, 0], ref[:, 3], color=REF_PATH, lw=1.0, ls="--",
                 label="reference height")
    for d in bundle.summary.get("disturbances", []):
        ax_side.axvline(d["t"], color="#555555", lw=1.0, ls=":")
        ax_side.annotate("push", (d["t"], ax_side.get_ylim()[1]),
                         fontsize=7, ha="left", va="top")
    ax_side.set_xlabel("t [s]")
    ax_side.set_ylabel("z [m]")
    ax_side.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, out_path)


def plot_terrain_scenario(bundle: LogBundle, out_path: str | Path,
                          style_file: str | None = None) -> Path:
    """Overhead view with gap bands / stones; footholds colored by status."""
    apply_style(style_file)
    gaps, stones, radius = bundle.terrain()
    if not gaps and stones is None:
        raise SchemaError("scenario has no terrain features to draw")
    traj = bundle.trajectory
    pos = traj.positions()
    feet_opt, _ = bundle.executed_footholds()

    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    for g_x, half in gaps:
        ax.axvspan(g_x - half, g_x + half, color="#f4c7c3", zorder=0,
                   label="gap" if (g_x, half) == gaps[0] else None)
    if stones is not None:
        ax.scatter(stones[:, 0], stones[:, 1], marker="s", s=26,
                   color="#9fd19f", zorder=1, label="stones")

    violated = np.zeros(len(feet_opt), dtype=bool)
    for i, s in enumerate(feet_opt):
        if any(abs(s[0] - g_x) < half for g_x, half in gaps):
            violated[i] = True
        if stones is not None:
            if np.min(np.linalg.norm(stones - s, axis=1)) > radius:
                violated[i] = True
    ok = ~violated
    if ok.any():
        ax.scatter(feet_opt[ok, 0], feet_opt[ok, 1], s=22, color=OPT_FOOT,
                   zorder=3, label="footholds")
    if violated.any():
        ax.scatter(feet_opt[violated, 0], feet_opt[violated, 1], s=34,
                   color="#d62728", marker="x", zorder=4, label="violations")
    ax.plot(pos[:, 0], pos[:, 1], color=EXEC_PATH, lw=1.4, zorder=2,
            label="base path")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(f"{bundle.summary.get('scenario', 'run')}: terrain")
    fig.tight_layout()
    return _save(fig, out_path)


def plot_multi_robot(bundle: LogBundle, out_path: str | Path,
                     style_file: str | None = None) -> Path:
    """Both robots' paths plus minimum-distance-over-time with threshold."""
    apply_style(style_file)
    if not bundle.is_multi_robot:
        raise SchemaError("multi-robot figure needs a two-robot log "
                          "(trajectory_b.csv not found)")
    ta, tb = bundle.trajectory, bundle.trajectory_b
    pa, pb = ta.positions(), tb.positions()
    n = min(len(pa), len(pb))
    dist = np.linalg.norm(pa[:n] - pb[:n], axis=1)
    threshold = (
        bundle.scenario.get("multi_robot") or {}
    ).get("min_distance", 1.0)

    fig, (ax_path, ax_dist) = plt.subplots(
        2, 1, figsize=(7.5, 7.0), height_ratios=[1.6, 1.0]
    )
    ax_path.plot(pa[:, 0], pa[:, 1], color=EXEC_PATH, lw=1.6, label="robot a")
    ax_path.plot(pb[:, 0], pb[:, 1], color="#1f77b4", lw=1.6, label="robot b")
    ax_path.scatter([pa[0, 0], pb[0, 0]], [pa[0, 1], pb[0, 1]], s=40,
                    marker="o", color="#333333", label="start")
    ax_path.set_xlabel("x [m]")
    ax_path.set_ylabel("y [m]")
    ax_path.set_aspect("equal", adjustable="datalim")
    ax_path.legend(loc="best", fontsize=8)
    ax_path.set_title(f"{bundle.summary.get('scenario', 'run')}: paths")

    ax_dist.plot(ta["t"][:n], dist, color="#1f77b4", lw=1.4)
    ax_dist.axhline(threshold, color="#d62728", lw=1.0, ls="--",
                    label=f"{threshold:.1f} m threshold")
    recorded = bundle.summary.get("min_inter_robot_distance")
    if recorded is not None:
        ax_dist.axhline(recorded, color="#888888", lw=0.8, ls=":",
                        label=f"run minimum {recorded:.2f} m")
    ax_dist.set_xlabel("t [s]")
    ax_dist.set_ylabel("distance [m]")
    ax_dist.set_ylim(bottom=0.0)
    ax_dist.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, out_path)
