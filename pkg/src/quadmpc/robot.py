"""Robot parameters and their file format.

Parameter files are YAML key-value trees:

    mass: 12.0
    inertia: [0.017, 0.056, 0.065]      # 3 diagonals or 9 row-major entries
    gravity: [0.0, 0.0, -9.81]
    hip_offsets:                        # base frame, order fl, fr, rl, rr
      - [0.183, 0.132, 0.0]
      - [0.183, -0.132, 0.0]
      - [-0.183, 0.132, 0.0]
      - [-0.183, -0.132, 0.0]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .exceptions import ScenarioError

__all__ = ["RobotParams", "load_robot_params", "default_robot_params", "LEG_NAMES"]

LEG_NAMES = ("fl", "fr", "rl", "rr")


def _default_gravity():
    return np.array([0.0, 0.0, -9.81])


@dataclass
class RobotParams:
    mass: float
    inertia_body: np.ndarray
    hip_offsets: np.ndarray
    gravity: np.ndarray = field(default_factory=_default_gravity)

    def __post_init__(self):
        self.inertia_body = np.asarray(self.inertia_body, dtype=float).reshape(3, 3)
        self.hip_offsets = np.asarray(self.hip_offsets, dtype=float).reshape(4, 3)
        self.gravity = np.asarray(self.gravity, dtype=float).reshape(3)
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if not np.allclose(self.inertia_body, self.inertia_body.T):
            raise ValueError("inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(self.inertia_body) <= 0.0):
            raise ValueError("inertia must be positive definite")

    @property
    def gravity_norm(self) -> float:
        return float(np.linalg.norm(self.gravity))


def _parse_inertia(raw) -> np.ndarray:
    arr = np.asarray(raw, dtype=float).ravel()
    if arr.size == 3:
        return np.diag(arr)
    if arr.size == 9:
        return arr.reshape(3, 3)
    raise ScenarioError("inertia", "expected 3 diagonals or 9 row-major entries")


def load_robot_params(path: str | Path) -> RobotParams:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ScenarioError(str(path), "robot parameter file must be a mapping")
    known = {"mass", "inertia", "gravity", "hip_offsets"}
    unknown = set(raw) - known
    if unknown:
        raise ScenarioError(sorted(unknown)[0], "unknown robot parameter key")
    missing = {"mass", "inertia", "hip_offsets"} - set(raw)
    if missing:
        raise ScenarioError(sorted(missing)[0], "missing robot parameter key")
    return RobotParams(
        mass=float(raw["mass"]),
        inertia_body=_parse_inertia(raw["inertia"]),
        hip_offsets=np.asarray(raw["hip_offsets"], dtype=float),
        gravity=np.asarray(raw.get("gravity", _default_gravity()), dtype=float),
    )


def default_robot_params() -> RobotParams:
    ref = resources.files("quadmpc.data") / "robot_default.yaml"
    with resources.as_file(ref) as path:
        return load_robot_params(path)
