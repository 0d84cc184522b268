"""Quadruped locomotion problem building.

Gait timing is handled in integer ticks of the planner step so schedules
are exactly reproducible and footholds can be keyed by (leg, stance cycle)
across receding-horizon shifts. Reference footholds follow the hip
projection at the mid-stance time of each foothold's interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InfeasibleGaitError
from .models.ipm import IpmModel, IpmSimplexCost, ipm_initial_state
from .models.srbm import SrbmModel, SrbmModelCost, srbm_initial_state
from .ocp import CostEval, CostTerm, DynamicsModel, ProblemDims
from .quat import quat_yaw, yaw_quat
from .robot import RobotParams

__all__ = [
    "GaitSpec",
    "FootholdInfo",
    "GaitSchedule",
    "CommandInput",
    "ReferencePlan",
    "build_gait_schedule",
    "reference_base_trajectory",
    "reference_footholds",
    "build_reference_plan",
    "TrackingCost",
    "LocomotionProblem",
    "assemble_locomotion_ocp",
    "initial_state",
]

N_LEGS = 4

K_BASE_VELOCITY = 1.0
K_BASE_HEIGHT = 1.0
K_FOOTHOLD_REG = 0.2
FOOTHOLD_PAIR_WINDOW = 3


@dataclass(frozen=True)
class GaitSpec:
    """Periodic contact pattern: shared period/duty, per-leg phase offsets."""

    period: float = 0.4
    duty: float = 0.5
    offsets: tuple = (0.0, 0.5, 0.5, 0.0)

    @staticmethod
    def trot(period: float = 0.4, duty: float = 0.5) -> "GaitSpec":
        return GaitSpec(period=period, duty=duty, offsets=(0.0, 0.5, 0.5, 0.0))

    @staticmethod
    def stand(period: float = 0.4) -> "GaitSpec":
        return GaitSpec(period=period, duty=1.0, offsets=(0.0, 0.0, 0.0, 0.0))


@dataclass(frozen=True)
class FootholdInfo:
    leg: int
    k_start: int
    k_end: int  # inclusive, clipped to the horizon
    cycle: int  # absolute stance-cycle index; warm-start key is (leg, cycle)


@dataclass
class GaitSchedule:
    contacts: np.ndarray  # (N, 4) bool
    stance_sets: list  # per step: array of foothold indices
    foothold_of_leg: np.ndarray  # (N, 4) int, -1 while swinging
    index_map: list  # FootholdInfo per foothold index

    @property
    def N(self) -> int:
        return self.contacts.shape[0]

    @property
    def foothold_count(self) -> int:
        return len(self.index_map)

    def stance_legs(self) -> list:
        return [
            np.array([self.index_map[i].leg for i in feet], dtype=int)
            for feet in self.stance_sets
        ]


def _ticks(value: float, dt: float, what: str) -> int:
    t = value / dt
    t_round = int(round(t))
    if abs(t - t_round) > 1e-6:
        raise InfeasibleGaitError(f"{what} ({value}) must be a multiple of dt ({dt})")
    return t_round


def build_gait_schedule(
    gait: GaitSpec, phase: float, N: int, dt: float, require_stance: bool = False
) -> GaitSchedule:
    """Sample the contact pattern over N steps starting at time ``phase``."""
    period_t = _ticks(gait.period, dt, "gait period")
    if period_t < 1:
        raise InfeasibleGaitError("gait period shorter than one step")
    stance_t = int(round(gait.duty * period_t))
    if stance_t < 1:
        raise InfeasibleGaitError("gait duty leaves no stance ticks")
    offsets_t = [int(round(o * period_t)) for o in gait.offsets]
    phase_t = _ticks(phase, dt, "gait phase")

    def in_stance(leg: int, tick: int) -> bool:
        return (tick - offsets_t[leg]) % period_t < stance_t

    def cycle_of(leg: int, tick: int) -> int:
        if stance_t >= period_t:
            return 0  # continuous stance: one foothold per leg
        return (tick - offsets_t[leg]) // period_t

    contacts = np.zeros((N, N_LEGS), dtype=bool)
    foothold_of_leg = np.full((N, N_LEGS), -1, dtype=int)
    index_map: list[FootholdInfo] = []
    key_to_index: dict = {}
    for k in range(N):
        tick = phase_t + k
        for leg in range(N_LEGS):
            if not in_stance(leg, tick):
                continue
            contacts[k, leg] = True
            key = (leg, cycle_of(leg, tick))
            idx = key_to_index.get(key)
            if idx is None:
                idx = len(index_map)
                key_to_index[key] = idx
                index_map.append(
                    FootholdInfo(leg=leg, k_start=k, k_end=k, cycle=key[1])
                )
            else:
                info = index_map[idx]
                index_map[idx] = FootholdInfo(
                    leg=info.leg, k_start=info.k_start, k_end=k, cycle=info.cycle
                )
            foothold_of_leg[k, leg] = idx

    stance_sets = [
        np.array(sorted(foothold_of_leg[k, foothold_of_leg[k] >= 0]), dtype=int)
        for k in range(N)
    ]
    if require_stance and any(len(s) == 0 for s in stance_sets):
        bad = next(k for k, s in enumerate(stance_sets) if len(s) == 0)
        raise InfeasibleGaitError(f"empty stance set at step {bad}")
    return GaitSchedule(
        contacts=contacts,
        stance_sets=stance_sets,
        foothold_of_leg=foothold_of_leg,
        index_map=index_map,
    )


@dataclass(frozen=True)
class CommandInput:
    v_xy: tuple = (0.0, 0.0)
    yaw_rate: float = 0.0
    target_height: float = 0.3

    def __post_init__(self):
        if self.target_height <= 0.0:
            raise ValueError("target_height must be positive")


@dataclass
class ReferencePlan:
    r_ref: np.ndarray  # (N+1, 3)
    h_ref: np.ndarray  # (N+1,)
    q_ref: np.ndarray  # (N+1, 4)
    s_ref: np.ndarray  # (F, 3)


def _rz(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def reference_base_trajectory(
    cmd: CommandInput, r0: np.ndarray, yaw0: float, N: int, dt: float
):
    """Integrate commanded planar velocity and yaw rate from the current pose."""
    r_ref = np.empty((N + 1, 3))
    q_ref = np.empty((N + 1, 4))
    h_ref = np.full(N + 1, cmd.target_height)
    v = np.array([cmd.v_xy[0], cmd.v_xy[1], 0.0])
    r_ref[0] = [r0[0], r0[1], cmd.target_height]
    yaw = yaw0
    q_ref[0] = yaw_quat(yaw)
    for k in range(N):
        r_ref[k + 1] = r_ref[k] + (_rz(yaw) @ v) * dt
        yaw += cmd.yaw_rate * dt
        q_ref[k + 1] = yaw_quat(yaw)
    return r_ref, h_ref, q_ref


def reference_footholds(
    schedule: GaitSchedule,
    r_ref: np.ndarray,
    q_ref: np.ndarray,
    hip_offsets: np.ndarray,
) -> np.ndarray:
    """Ground projection of each hip at the midpoint of its stance interval."""
    s_ref = np.empty((schedule.foothold_count, 3))
    for i, info in enumerate(schedule.index_map):
        k_mid = (info.k_start + info.k_end) // 2
        yaw = quat_yaw(q_ref[k_mid])
        hip = r_ref[k_mid] + _rz(yaw) @ hip_offsets[info.leg]
        s_ref[i] = [hip[0], hip[1], 0.0]
    return s_ref


def build_reference_plan(
    cmd: CommandInput,
    schedule: GaitSchedule,
    r0: np.ndarray,
    yaw0: float,
    hip_offsets: np.ndarray,
    dt: float,
) -> ReferencePlan:
    r_ref, h_ref, q_ref = reference_base_trajectory(cmd, r0, yaw0, schedule.N, dt)
    s_ref = reference_footholds(schedule, r_ref, q_ref, hip_offsets)
    return ReferencePlan(r_ref=r_ref, h_ref=h_ref, q_ref=q_ref, s_ref=s_ref)


class TrackingCost(CostTerm):
    """Base velocity + height tracking and relative foothold regularization.

    Quadratic in (X, U): residuals are gathered with precomputed index
    arrays and the Hessian blocks are constant. Assumes each state block
    starts with [r_k, r_{k-1}] (true for both shipped models).
    """

    def __init__(
        self,
        dims: ProblemDims,
        plan: ReferencePlan,
        k_velocity: float = K_BASE_VELOCITY,
        k_height: float = K_BASE_HEIGHT,
        k_foothold: float = K_FOOTHOLD_REG,
    ):
        self.dims = dims
        self.plan = plan
        self.kv = k_velocity
        self.kh = k_height
        self.kf = k_foothold
        F = plan.s_ref.shape[0]
        self.pairs = [
            (i, j)
            for i in range(F)
            for j in range(i + 1, min(F, i + 1 + FOOTHOLD_PAIR_WINDOW))
        ]
        bases = dims.n * np.arange(dims.N)[:, None]
        self._r_idx = bases + np.arange(3)
        self._rp_idx = bases + 3 + np.arange(3)
        self._z_idx = (bases + 2).ravel()
        self._dref = plan.r_ref[1:] - plan.r_ref[:-1]
        self._h_ref = plan.h_ref[1:]
        self._pi = np.array([i for i, _ in self.pairs], dtype=int)
        self._pj = np.array([j for _, j in self.pairs], dtype=int)
        self._sref_d = plan.s_ref[self._pi] - plan.s_ref[self._pj]
        self._hxx = self._build_hxx()
        self._huu = self._build_huu()

    def _build_hxx(self) -> np.ndarray:
        dims = self.dims
        hxx = np.zeros((dims.N, dims.n, dims.n))
        block = 2.0 * self.kv * np.block(
            [[np.eye(3), -np.eye(3)], [-np.eye(3), np.eye(3)]]
        )
        hxx[:, :6, :6] = block
        hxx[:, 2, 2] += 2.0 * self.kh
        return hxx

    def _build_huu(self) -> np.ndarray:
        dims = self.dims
        huu = np.zeros((dims.nu, dims.nu))
        p0 = dims.N * dims.m
        eye3 = np.eye(3)
        for i, j in self.pairs:
            si = slice(p0 + 3 * i, p0 + 3 * i + 3)
            sj = slice(p0 + 3 * j, p0 + 3 * j + 3)
            huu[si, si] += 2.0 * self.kf * eye3
            huu[sj, sj] += 2.0 * self.kf * eye3
            huu[si, sj] -= 2.0 * self.kf * eye3
            huu[sj, si] -= 2.0 * self.kf * eye3
        return huu

    def _residuals(self, X, U):
        d_vel = X[self._r_idx] - X[self._rp_idx] - self._dref
        d_h = X[self._z_idx] - self._h_ref
        feet = U[self.dims.N * self.dims.m :].reshape(-1, 3)
        d_foot = feet[self._pi] - feet[self._pj] - self._sref_d
        return d_vel, d_h, d_foot

    def value(self, X, U):
        d_vel, d_h, d_foot = self._residuals(X, U)
        return float(
            self.kv * np.sum(d_vel * d_vel)
            + self.kh * np.sum(d_h * d_h)
            + self.kf * np.sum(d_foot * d_foot)
        )

    def derivatives(self, X, U):
        dims = self.dims
        d_vel, d_h, d_foot = self._residuals(X, U)
        gx = np.zeros(dims.nx)
        gx[self._r_idx.ravel()] = (2.0 * self.kv) * d_vel.ravel()
        gx[self._rp_idx.ravel()] = (-2.0 * self.kv) * d_vel.ravel()
        gx[self._z_idx] += (2.0 * self.kh) * d_h
        gu = np.zeros(dims.nu)
        g_feet = np.zeros((dims.p // 3, 3))
        np.add.at(g_feet, self._pi, (2.0 * self.kf) * d_foot)
        np.add.at(g_feet, self._pj, (-2.0 * self.kf) * d_foot)
        gu[dims.N * dims.m :] = g_feet.ravel()
        value = float(
            self.kv * np.sum(d_vel * d_vel)
            + self.kh * np.sum(d_h * d_h)
            + self.kf * np.sum(d_foot * d_foot)
        )
        return CostEval(value=value, gx=gx, gu=gu, hxx=self._hxx, huu=self._huu)


@dataclass
class LocomotionProblem:
    """Everything one `quadmpc.ocp.solve` call needs."""

    model: DynamicsModel
    costs: list
    x0: np.ndarray
    u_init: np.ndarray
    schedule: GaitSchedule
    plan: ReferencePlan
    foothold_rows: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    @property
    def dims(self) -> ProblemDims:
        return self.model.dims


def initial_state(
    model_kind: str,
    r0,
    v0,
    dt: float,
    q0=None,
    omega0=None,
) -> np.ndarray:
    if model_kind == "ipm":
        return ipm_initial_state(r0, v0, dt)
    if model_kind == "srbm":
        q0 = np.array([1.0, 0.0, 0.0, 0.0]) if q0 is None else q0
        omega0 = np.zeros(3) if omega0 is None else omega0
        return srbm_initial_state(r0, v0, q0, omega0, dt)
    raise ValueError(f"unknown model kind '{model_kind}'")


def assemble_locomotion_ocp(
    model_kind: str,
    schedule: GaitSchedule,
    plan: ReferencePlan,
    scenario_costs: list,
    x0: np.ndarray,
    params: RobotParams,
    dt: float,
) -> LocomotionProblem:
    """Wire model, tracking/model costs and warm-startable U layout together."""
    N = schedule.N
    F = schedule.foothold_count
    stance_legs = schedule.stance_legs()

    if model_kind == "ipm":
        dims = ProblemDims(n=6, m=1 + N_LEGS, p=3 * F, N=N, dt=dt)
        if any(len(s) == 0 for s in schedule.stance_sets):
            raise InfeasibleGaitError("pendulum model cannot handle flight phases")
        model = IpmModel(dims, schedule.stance_sets, stance_legs, params)
        model_cost = IpmSimplexCost(dims, stance_legs)
    elif model_kind == "srbm":
        dims = ProblemDims(n=14, m=3 * N_LEGS, p=3 * F, N=N, dt=dt)
        model = SrbmModel(dims, schedule.stance_sets, stance_legs, params)
        model_cost = SrbmModelCost(dims, stance_legs, plan.q_ref)
    else:
        raise ValueError(f"unknown model kind '{model_kind}'")

    u_init = np.zeros(dims.nu)
    hover = params.mass * params.gravity_norm
    for k in range(N):
        legs = stance_legs[k]
        if len(legs) == 0:
            continue
        us = dims.u_slice(k)
        if model_kind == "ipm":
            u_init[us.start + 1 + legs] = 1.0 / len(legs)
        else:
            u_init[us.start + 3 * legs + 2] = hover / len(legs)
    u_init[dims.p_slice] = plan.s_ref.ravel()

    costs = [TrackingCost(dims, plan), model_cost] + list(scenario_costs)
    foothold_rows = np.arange(dims.N * dims.m, dims.nu)
    return LocomotionProblem(
        model=model,
        costs=costs,
        x0=np.asarray(x0, dtype=float),
        u_init=u_init,
        schedule=schedule,
        plan=plan,
        foothold_rows=foothold_rows,
    )
