"""Log-bundle loading against the documented file contracts.

A log directory holds trajectory.csv (one row per simulator substep),
summary.json, and scenario-resolved.yaml; two-robot runs add
trajectory_b.csv with the same schema. Documented columns must all be
present (anything missing is a SchemaError naming the column); columns
beyond the contract are ignored.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

__all__ = ["SchemaError", "LogBundle", "TRAJECTORY_COLUMNS", "LEG_NAMES"]

LEG_NAMES = ("fl", "fr", "rl", "rr")

# the trajectory.csv contract, in order
TRAJECTORY_COLUMNS = (
    ["t", "r_x", "r_y", "r_z", "q_w", "q_x", "q_y", "q_z"]
    + [f"contact_{leg}" for leg in LEG_NAMES]
    + [f"foothold_{leg}_{ax}" for leg in LEG_NAMES for ax in "xyz"]
    + ["solve_ms", "converged"]
)


class SchemaError(Exception):
    """The on-disk log does not match the documented contract."""


@dataclass
class Trajectory:
    """Parsed trajectory table with named column access."""

    data: dict  # column name -> float ndarray

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[name]

    @property
    def n_rows(self) -> int:
        return len(self.data["t"])

    def positions(self) -> np.ndarray:
        return np.column_stack([self.data["r_x"], self.data["r_y"], self.data["r_z"]])

    def leg_footholds(self, leg: str) -> np.ndarray:
        return np.column_stack(
            [self.data[f"foothold_{leg}_{ax}"] for ax in "xyz"]
        )


def _read_trajectory(path: Path) -> Trajectory:
    if not path.exists():
        raise SchemaError(f"missing trajectory file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path.name}: empty file") from None
        missing = [c for c in TRAJECTORY_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path.name}: missing column '{missing[0]}'")
        idx = {c: header.index(c) for c in TRAJECTORY_COLUMNS}
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path.name}: no data rows")
    cols = {}
    for name, i in idx.items():
        try:
            cols[name] = np.array([float(r[i]) for r in rows])
        except (ValueError, IndexError) as exc:
            raise SchemaError(f"{path.name}: bad value in column '{name}'") from exc
    return Trajectory(data=cols)


def _terrain_from_scenario(scenario: dict) -> tuple:
    """Gap bands and stone centers from the resolved scenario copy."""
    terrain = scenario.get("terrain") or {}
    gaps = [
        (float(g["x"]), float(g["half_width"]))
        for g in (terrain.get("gaps") or [])
    ]
    stones = None
    radius = 0.06
    raw = terrain.get("stones")
    if raw:
        radius = float(raw.get("radius", 0.06))
        if "points" in raw:
            pts = np.asarray(raw["points"], dtype=float)
            if pts.shape[1] == 2:
                pts = np.hstack([pts, np.zeros((len(pts), 1))])
            stones = pts
        elif "grid" in raw:
            g = raw["grid"]
            ox, oy = (float(v) for v in g.get("origin", [0.0, 0.0]))
            xs = ox + float(g["pitch"]) * np.arange(int(g["nx"]))
            ys = oy + float(g["pitch"]) * np.arange(int(g["ny"]))
            stones = np.array([[x, y, 0.0] for x in xs for y in ys])
    return gaps, stones, radius


@dataclass
class LogBundle:
    """One finished run: trajectory table(s), summary, resolved scenario."""

    trajectory: Trajectory
    summary: dict
    scenario: dict
    trajectory_b: Trajectory | None = None
    path: Path | None = None

    @classmethod
    def load(cls, log_dir: str | Path) -> "LogBundle":
        log_dir = Path(log_dir)
        trajectory = _read_trajectory(log_dir / "trajectory.csv")
        summary_path = log_dir / "summary.json"
        if not summary_path.exists():
            raise SchemaError(f"missing summary file: {summary_path}")
        try:
            summary = json.loads(summary_path.read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"summary.json: {exc}") from exc
        for key in ("robots", "solve_ms", "disturbances"):
            if key not in summary:
                raise SchemaError(f"summary.json: missing key '{key}'")
        scenario_path = log_dir / "scenario-resolved.yaml"
        if not scenario_path.exists():
            raise SchemaError(f"missing scenario copy: {scenario_path}")
        scenario = yaml.safe_load(scenario_path.read_text())
        trajectory_b = None
        if (log_dir / "trajectory_b.csv").exists():
            trajectory_b = _read_trajectory(log_dir / "trajectory_b.csv")
        return cls(
            trajectory=trajectory,
            summary=summary,
            scenario=scenario,
            trajectory_b=trajectory_b,
            path=log_dir,
        )

    @property
    def is_multi_robot(self) -> bool:
        return self.trajectory_b is not None

    def terrain(self):
        return _terrain_from_scenario(self.scenario)

    def robot_summary(self, robot: int = 0) -> dict:
        robots = self.summary.get("robots", [])
        if robot >= len(robots):
            raise SchemaError(f"summary.json: no robot {robot}")
        return robots[robot]

    def reference_path(self, robot: int = 0) -> np.ndarray:
        ref = self.robot_summary(robot).get("reference_path")
        if not ref:
            raise SchemaError("summary.json: missing reference_path")
        return np.asarray(ref, dtype=float)  # columns t, x, y, z

    def executed_footholds(self, robot: int = 0):
        rows = self.robot_summary(robot).get("executed_footholds")
        if rows is None:
            raise SchemaError("summary.json: missing executed_footholds")
        pos = np.array([r["position"] for r in rows]).reshape(-1, 3)
        ref = np.array([r["reference"] for r in rows]).reshape(-1, 3)
        return pos, ref
