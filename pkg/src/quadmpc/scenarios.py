"""Scenario cost terms, scenario files, and post-hoc foothold validation.

Penalty terms keep exact gradients. Their Gauss-Newton blocks drop inner
curvature (gap/collision) or clamp the radial eigenvalue (stepping-stone
wells) so every term hands the solver positive-semidefinite curvature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .exceptions import ScenarioError
from .locomotion import CommandInput, GaitSpec
from .ocp import CostEval, CostTerm, ProblemDims, SolverOptions
from .robot import RobotParams, default_robot_params, load_robot_params
from .smooth import SmoothPlusParams, smooth_plus, smooth_plus_d1, smooth_plus_d2

__all__ = [
    "GapSpec",
    "StoneField",
    "MultiRobotSpec",
    "Disturbance",
    "GapCost",
    "SteppingStoneCost",
    "CollisionCost",
    "Scenario",
    "RobotSetup",
    "load_scenario",
    "bundled_scenario_path",
    "ViolationReport",
    "validate_footholds",
]

K_GAP = 1.0
K_STONE = 0.1
STONE_SIGMA = 0.041
K_COLLISION = 1.0
ABS_SMOOTHING = 1e-6


@dataclass(frozen=True)
class GapSpec:
    g_x: float
    half_width: float

    def __post_init__(self):
        if self.half_width <= 0.0:
            raise ValueError("gap half width must be positive")


@dataclass
class StoneField:
    stones: np.ndarray  # (K, 3)
    radius: float = 0.06

    def __post_init__(self):
        self.stones = np.asarray(self.stones, dtype=float).reshape(-1, 3)
        if self.stones.shape[0] == 0:
            raise ValueError("stone field is empty")
        diff = self.stones[:, None, :] - self.stones[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        np.fill_diagonal(dist, np.inf)
        if np.min(dist) <= 0.0:
            raise ValueError("stones must be distinct")


@dataclass(frozen=True)
class MultiRobotSpec:
    robot_a: int = 0
    robot_b: int = 1
    min_distance: float = 1.0

    def __post_init__(self):
        if self.min_distance <= 0.0:
            raise ValueError("min_distance must be positive")


@dataclass(frozen=True)
class Disturbance:
    t_apply: float
    impulse: tuple  # world-frame linear impulse, N*s
    robot: int = 0


def _smooth_norm(d: np.ndarray) -> float:
    return float(np.sqrt(d @ d + ABS_SMOOTHING**2))


class GapCost(CostTerm):
    """Pushes foothold x-coordinates out of gap bands."""

    def __init__(self, dims: ProblemDims, gaps: list, k_gap: float = K_GAP,
                 eps: float = 0.1):
        self.dims = dims
        self.gaps = list(gaps)
        self.k = k_gap
        self.eps = eps

    def _foot_x_cols(self):
        p0 = self.dims.N * self.dims.m
        return np.arange(p0, self.dims.nu, 3)

    def value(self, X, U):
        total = 0.0
        cols = self._foot_x_cols()
        for gap in self.gaps:
            sp = SmoothPlusParams(r=gap.half_width, eps=self.eps)
            dx = U[cols] - gap.g_x
            a = np.sqrt(dx * dx + ABS_SMOOTHING**2)
            total += self.k * np.sum(smooth_plus(a, sp))
        return float(total)

    def derivatives(self, X, U):
        dims = self.dims
        gu = np.zeros(dims.nu)
        huu = np.zeros((dims.nu, dims.nu))
        total = 0.0
        cols = self._foot_x_cols()
        for gap in self.gaps:
            sp = SmoothPlusParams(r=gap.half_width, eps=self.eps)
            dx = U[cols] - gap.g_x
            a = np.sqrt(dx * dx + ABS_SMOOTHING**2)
            da = dx / a
            total += self.k * np.sum(smooth_plus(a, sp))
            gu[cols] += self.k * smooth_plus_d1(a, sp) * da
            # inner |.| curvature dropped: keeps the block PSD
            huu[cols, cols] += self.k * smooth_plus_d2(a, sp) * da * da
        return CostEval(value=float(total), gu=gu, huu=huu)


class SteppingStoneCost(CostTerm):
    """Attractive Gaussian wells at each stone, summed over all pairs."""

    def __init__(self, dims: ProblemDims, field_: StoneField,
                 k_stone: float = K_STONE, sigma: float = STONE_SIGMA):
        self.dims = dims
        self.stones = field_.stones
        self.k = k_stone
        self.sigma2 = sigma * sigma

    def _foot_blocks(self):
        p0 = self.dims.N * self.dims.m
        return [slice(c, c + 3) for c in range(p0, self.dims.nu, 3)]

    def value(self, X, U):
        feet = U[self.dims.N * self.dims.m :].reshape(-1, 1, 3)
        d = feet - self.stones[None, :, :]
        e = np.exp(-0.5 * np.einsum("fkj,fkj->fk", d, d) / self.sigma2)
        return float(-self.k * e.sum())

    def derivatives(self, X, U):
        dims = self.dims
        gu = np.zeros(dims.nu)
        huu = np.zeros((dims.nu, dims.nu))
        total = 0.0
        for blk in self._foot_blocks():
            s = U[blk]
            for t in self.stones:
                d = s - t
                e = float(np.exp(-0.5 * (d @ d) / self.sigma2))
                total += -self.k * e
                gu[blk] += self.k * e * d / self.sigma2
                # exact well Hessian with its radial eigenvalue clamped at 0
                dn = d @ d
                tangential = self.k * e / self.sigma2
                radial = max(0.0, self.k * e * (1.0 / self.sigma2 - dn / self.sigma2**2))
                if dn > 0.0:
                    u_hat = d / np.sqrt(dn)
                    proj = np.outer(u_hat, u_hat)
                    huu[blk, blk] += tangential * (np.eye(3) - proj) + radial * proj
                else:
                    huu[blk, blk] += tangential * np.eye(3)
        return CostEval(value=float(total), gu=gu, huu=huu)


class CollisionCost(CostTerm):
    """Keeps the two stacked robots' base positions apart at every step."""

    def __init__(self, dims: ProblemDims, offset_a: int, offset_b: int,
                 min_distance: float = 1.0, k_collision: float = K_COLLISION,
                 eps: float = 0.1):
        self.dims = dims
        self.offset_a = offset_a
        self.offset_b = offset_b
        self.sp = SmoothPlusParams(r=min_distance, eps=eps)
        self.k = k_collision

    def _pos_rows(self, k: int):
        base = (k - 1) * self.dims.n
        return (
            slice(base + self.offset_a, base + self.offset_a + 3),
            slice(base + self.offset_b, base + self.offset_b + 3),
        )

    def value(self, X, U):
        total = 0.0
        for k in range(1, self.dims.N + 1):
            ra, rb = self._pos_rows(k)
            total += self.k * smooth_plus(_smooth_norm(X[ra] - X[rb]), self.sp)
        return float(total)

    def derivatives(self, X, U):
        dims = self.dims
        gx = np.zeros(dims.nx)
        hxx = np.zeros((dims.N, dims.n, dims.n))
        oa = slice(self.offset_a, self.offset_a + 3)
        ob = slice(self.offset_b, self.offset_b + 3)
        total = 0.0
        for k in range(1, dims.N + 1):
            ra, rb = self._pos_rows(k)
            d = X[ra] - X[rb]
            a = _smooth_norm(d)
            total += self.k * smooth_plus(a, self.sp)
            da = d / a
            g = self.k * smooth_plus_d1(a, self.sp) * da
            gx[ra] += g
            gx[rb] -= g
            # inner norm curvature dropped: keeps the block PSD
            c2 = self.k * smooth_plus_d2(a, self.sp)
            blk = c2 * np.outer(da, da)
            hxx[k - 1, oa, oa] += blk
            hxx[k - 1, ob, ob] += blk
            hxx[k - 1, oa, ob] -= blk
            hxx[k - 1, ob, oa] -= blk
        return CostEval(value=float(total), gx=gx, hxx=hxx)


# ---------------------------------------------------------------------------
# scenario files


@dataclass
class RobotSetup:
    params: RobotParams
    start_xy: tuple = (0.0, 0.0)
    heading: float = 0.0
    commands: list = field(default_factory=list)  # [(t, CommandInput)]

    def command_at(self, t: float) -> CommandInput:
        active = self.commands[0][1]
        for t_cmd, cmd in self.commands:
            if t_cmd <= t + 1e-12:
                active = cmd
            else:
                break
        return active


@dataclass
class Scenario:
    name: str
    model: str
    N: int
    dt: float
    gait: GaitSpec
    target_height: float
    robots: list
    gaps: list = field(default_factory=list)
    stones: StoneField | None = None
    disturbances: list = field(default_factory=list)
    solver: SolverOptions = field(default_factory=SolverOptions)
    duration: float = 5.0
    replan_period: float = 0.04
    substeps: int = 4
    deterministic_timing: bool = False
    station_keeping_gain: float = 1.0
    station_keeping_cap: float = 0.3
    gap_weight: float = K_GAP
    multi_robot: MultiRobotSpec | None = None
    optimize_footholds: bool = True
    seed: int = 0
    resolved: dict = field(default_factory=dict)

    def terrain_costs(self, dims: ProblemDims) -> list:
        costs = []
        if self.gaps and self.gap_weight != 0.0:
            costs.append(GapCost(dims, self.gaps, k_gap=self.gap_weight))
        if self.stones is not None:
            costs.append(SteppingStoneCost(dims, self.stones))
        return costs


def _require(cond: bool, fieldname: str, detail: str):
    if not cond:
        raise ScenarioError(fieldname, detail)


def _check_keys(raw: dict, allowed: set, context: str):
    unknown = set(raw) - allowed
    if unknown:
        key = sorted(unknown)[0]
        where = f"{context}.{key}" if context else key
        raise ScenarioError(where, "unknown key")


_DEFAULTS_CACHE: dict | None = None


def _defaults() -> dict:
    global _DEFAULTS_CACHE
    if _DEFAULTS_CACHE is None:
        ref = resources.files("quadmpc.data") / "defaults.yaml"
        _DEFAULTS_CACHE = yaml.safe_load(ref.read_text())
    return yaml.safe_load(yaml.safe_dump(_DEFAULTS_CACHE))  # deep copy


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def apply_overrides(raw: dict, overrides: dict) -> dict:
    """Apply dotted-path overrides; each path must already exist."""
    for dotted, value in overrides.items():
        node = raw
        parts = dotted.split(".")
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ScenarioError(dotted, "override path does not exist")
            node = node[part]
        if not isinstance(node, dict) or parts[-1] not in node:
            raise ScenarioError(dotted, "override path does not exist")
        node[parts[-1]] = yaml.safe_load(str(value))
    return raw


def _parse_commands(raw_cmds, target_height: float, context: str) -> list:
    cmds = []
    for i, c in enumerate(raw_cmds):
        ctx = f"{context}[{i}]"
        _check_keys(c, {"t", "v_x", "v_y", "yaw_rate"}, ctx)
        cmd = CommandInput(
            v_xy=(float(c.get("v_x", 0.0)), float(c.get("v_y", 0.0))),
            yaw_rate=float(c.get("yaw_rate", 0.0)),
            target_height=target_height,
        )
        cmds.append((float(c.get("t", 0.0)), cmd))
    cmds.sort(key=lambda tc: tc[0])
    _require(bool(cmds), context, "needs at least one command entry")
    return cmds


def _parse_stones(raw: dict) -> StoneField:
    _check_keys(raw, {"points", "grid", "radius"}, "terrain.stones")
    radius = float(raw.get("radius", 0.06))
    _require(radius > 0.0, "terrain.stones.radius", "must be positive")
    if "points" in raw:
        pts = np.asarray(raw["points"], dtype=float)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise ScenarioError("terrain.stones.points", "expected [x, y(, z)] rows")
        if pts.shape[1] == 2:
            pts = np.hstack([pts, np.zeros((pts.shape[0], 1))])
        return StoneField(stones=pts, radius=radius)
    if "grid" in raw:
        g = raw["grid"]
        _check_keys(g, {"pitch", "nx", "ny", "origin"}, "terrain.stones.grid")
        pitch = float(g["pitch"])
        _require(pitch > 0.0, "terrain.stones.grid.pitch", "must be positive")
        ox, oy = (float(v) for v in g.get("origin", [0.0, 0.0]))
        nx, ny = int(g["nx"]), int(g["ny"])
        _require(nx > 0 and ny > 0, "terrain.stones.grid", "nx, ny must be positive")
        xs = ox + pitch * np.arange(nx)
        ys = oy + pitch * np.arange(ny)
        pts = np.array([[x, y, 0.0] for x in xs for y in ys])
        return StoneField(stones=pts, radius=radius)
    raise ScenarioError("terrain.stones", "needs 'points' or 'grid'")


def load_scenario(path: str | Path, overrides: dict | None = None) -> Scenario:
    """Parse and validate a scenario file; unknown keys are errors."""
    path = Path(path)
    try:
        raw_text = path.read_text()
    except OSError as exc:
        raise ScenarioError(str(path), f"cannot read scenario file: {exc}") from exc
    try:
        raw = yaml.safe_load(raw_text)
    except yaml.YAMLError as exc:
        raise ScenarioError(str(path), f"parse error: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(str(path), "scenario file must be a mapping")

    raw = _merge(_defaults(), raw)
    if overrides:
        raw = apply_overrides(raw, overrides)

    top_keys = {
        "name", "model", "horizon", "gait", "target_height", "commands",
        "terrain", "robots", "disturbances", "solver", "sim",
        "multi_robot", "optimize_footholds", "seed",
    }
    _check_keys(raw, top_keys, "")

    model = str(raw.get("model", "ipm"))
    _require(model in ("ipm", "srbm"), "model", f"unknown model '{model}'")

    hz = raw["horizon"]
    _check_keys(hz, {"N", "dt"}, "horizon")
    N, dt = int(hz["N"]), float(hz["dt"])
    _require(N >= 1, "horizon.N", "must be >= 1")
    _require(dt > 0.0, "horizon.dt", "must be positive")

    g = raw["gait"]
    _check_keys(g, {"type", "period", "duty", "offsets"}, "gait")
    gtype = g.get("type", "trot")
    period = float(g.get("period", 0.4))
    duty = float(g.get("duty", 0.5))
    _require(period > 0.0, "gait.period", "must be positive")
    _require(0.0 < duty <= 1.0, "gait.duty", "must lie in (0, 1]")
    if gtype == "trot":
        gait = GaitSpec.trot(period=period, duty=duty)
    elif gtype == "stand":
        gait = GaitSpec(period=period, duty=1.0, offsets=(0.0,) * 4)
    elif gtype == "custom":
        offs = tuple(float(o) for o in g["offsets"])
        _require(len(offs) == 4, "gait.offsets", "needs 4 per-leg offsets")
        gait = GaitSpec(period=period, duty=duty, offsets=offs)
    else:
        raise ScenarioError("gait.type", f"unknown gait '{gtype}'")

    target_height = float(raw["target_height"])
    _require(target_height > 0.0, "target_height", "must be positive")

    default_commands = _parse_commands(raw["commands"], target_height, "commands")

    robots_raw = raw.get("robots") or [{}]
    _require(1 <= len(robots_raw) <= 2, "robots", "supports 1 or 2 robots")
    robots = []
    for i, r in enumerate(robots_raw):
        ctx = f"robots[{i}]"
        _check_keys(r, {"params", "start", "heading", "commands"}, ctx)
        pref = r.get("params", "default")
        if pref == "default":
            params = default_robot_params()
        else:
            params = load_robot_params(path.parent / pref)
        start = tuple(float(v) for v in r.get("start", [0.0, 0.0]))
        _require(len(start) == 2, f"{ctx}.start", "expected [x, y]")
        cmds = (
            _parse_commands(r["commands"], target_height, f"{ctx}.commands")
            if "commands" in r
            else default_commands
        )
        robots.append(
            RobotSetup(
                params=params,
                start_xy=start,
                heading=float(r.get("heading", 0.0)),
                commands=cmds,
            )
        )

    gaps = []
    stones = None
    terrain = raw.get("terrain") or {}
    _check_keys(terrain, {"gaps", "stones", "gap_weight"}, "terrain")
    gap_weight = float(terrain.get("gap_weight", K_GAP))
    _require(gap_weight >= 0.0, "terrain.gap_weight", "must be non-negative")
    for i, graw in enumerate(terrain.get("gaps") or []):
        ctx = f"terrain.gaps[{i}]"
        _check_keys(graw, {"x", "half_width"}, ctx)
        half = float(graw["half_width"])
        _require(half > 0.0, f"{ctx}.half_width", "must be positive")
        gaps.append(GapSpec(g_x=float(graw["x"]), half_width=half))
    if terrain.get("stones") is not None:
        stones = _parse_stones(terrain["stones"])

    sim = raw["sim"]
    _check_keys(
        sim,
        {
            "duration", "replan_period", "substeps", "deterministic_timing",
            "station_keeping_gain", "station_keeping_cap",
        },
        "sim",
    )
    duration = float(sim["duration"])
    replan_period = float(sim["replan_period"])
    substeps = int(sim.get("substeps", 4))
    _require(duration > 0.0, "sim.duration", "must be positive")
    _require(replan_period >= dt / substeps, "sim.replan_period",
             "must cover at least one simulator substep")
    _require(substeps >= 1, "sim.substeps", "must be >= 1")

    disturbances = []
    for i, d in enumerate(raw.get("disturbances") or []):
        ctx = f"disturbances[{i}]"
        _check_keys(d, {"t", "impulse", "robot"}, ctx)
        t_apply = float(d["t"])
        _require(0.0 <= t_apply <= duration, f"{ctx}.t",
                 "must lie within the simulation duration")
        imp = tuple(float(v) for v in d["impulse"])
        _require(len(imp) == 3, f"{ctx}.impulse", "expected [x, y, z]")
        robot_idx = int(d.get("robot", 0))
        _require(0 <= robot_idx < len(robots), f"{ctx}.robot", "no such robot")
        disturbances.append(Disturbance(t_apply=t_apply, impulse=imp, robot=robot_idx))

    sol_raw = raw["solver"]
    _check_keys(
        sol_raw,
        {
            "max_iterations", "gradient_tolerance", "step_tolerance",
            "levenberg_lambda", "line_search_shrink", "line_search_min_step",
            "armijo_c", "improvement_tolerance",
        },
        "solver",
    )
    solver = SolverOptions(**{k: (int(v) if k == "max_iterations" else float(v))
                              for k, v in sol_raw.items()})

    multi = None
    if raw.get("multi_robot") is not None:
        mr = raw["multi_robot"]
        _check_keys(mr, {"min_distance"}, "multi_robot")
        mind = float(mr.get("min_distance", 1.0))
        _require(mind > 0.0, "multi_robot.min_distance", "must be positive")
        multi = MultiRobotSpec(min_distance=mind)
    if len(robots) == 2 and multi is None:
        multi = MultiRobotSpec()

    return Scenario(
        name=str(raw.get("name", path.stem)),
        model=model,
        N=N,
        dt=dt,
        gait=gait,
        target_height=target_height,
        robots=robots,
        gaps=gaps,
        stones=stones,
        disturbances=disturbances,
        solver=solver,
        duration=duration,
        replan_period=replan_period,
        substeps=substeps,
        deterministic_timing=bool(sim.get("deterministic_timing", False)),
        station_keeping_gain=float(sim.get("station_keeping_gain", 1.0)),
        station_keeping_cap=float(sim.get("station_keeping_cap", 0.3)),
        gap_weight=gap_weight,
        multi_robot=multi,
        optimize_footholds=bool(raw.get("optimize_footholds", True)),
        seed=int(raw.get("seed", 0)),
        resolved=raw,
    )


def bundled_scenario_path(name: str) -> Path:
    ref = resources.files("quadmpc.data") / "scenarios" / f"{name}.yaml"
    with resources.as_file(ref) as p:
        return Path(p)


# ---------------------------------------------------------------------------
# post-hoc validation


@dataclass
class ViolationReport:
    total: int
    in_gap: list
    off_stone: list

    @property
    def gap_violations(self) -> int:
        return int(sum(self.in_gap))

    @property
    def stone_violations(self) -> int:
        return int(sum(self.off_stone))

    @property
    def violation_count(self) -> int:
        return int(sum(a or b for a, b in zip(self.in_gap, self.off_stone)))

    def as_dict(self) -> dict:
        n = max(self.total, 1)
        return {
            "footholds": self.total,
            "gap_violations": self.gap_violations,
            "stone_violations": self.stone_violations,
            "violation_rate": round((self.violation_count) / n, 6),
        }


def validate_footholds(
    footholds: np.ndarray, gaps: list, stones: StoneField | None
) -> ViolationReport:
    """Check executed footholds against gap bands and stone radii."""
    footholds = np.asarray(footholds, dtype=float).reshape(-1, 3)
    in_gap = []
    off_stone = []
    for s in footholds:
        bad_gap = any(abs(s[0] - gap.g_x) < gap.half_width for gap in gaps)
        if stones is not None:
            dmin = float(np.min(np.linalg.norm(stones.stones - s, axis=1)))
            bad_stone = dmin > stones.radius
        else:
            bad_stone = False
        in_gap.append(bool(bad_gap))
        off_stone.append(bool(bad_stone))
    return ViolationReport(total=footholds.shape[0], in_gap=in_gap, off_stone=off_stone)
