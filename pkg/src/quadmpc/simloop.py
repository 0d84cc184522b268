"""Receding-horizon MPC closed around a model-based ground-truth simulator.

Ground truth integrates the same simplified dynamics at a finer substep
(dt / substeps), which isolates planner behaviour from whole-body tracking
concerns. Plans are warm-started by shifting the previous solution one
planner step and re-keying footholds by (leg, stance cycle).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import QuadMpcError
from .locomotion import (
    N_LEGS,
    CommandInput,
    GaitSchedule,
    ReferencePlan,
    assemble_locomotion_ocp,
    build_gait_schedule,
    build_reference_plan,
)
from .models.ipm import ipm_accel
from .models.multi import EmbeddedCost, MultiRobotModel
from .models.srbm import decode_omega, srbm_angular_accel, srbm_initial_state, srbm_translational_accel
from .ocp import SolveStats, solve
from .quat import qmul, qnormalize, quat_exp, quat_yaw, yaw_quat
from .robot import LEG_NAMES
from .scenarios import CollisionCost, Disturbance, Scenario, validate_footholds

__all__ = [
    "Disturbance",
    "SimState",
    "MpcState",
    "SimLog",
    "apply_disturbance",
    "mpc_step",
    "simulate",
    "write_log",
    "TRAJECTORY_COLUMNS",
]

TRAJECTORY_COLUMNS = (
    ["t", "r_x", "r_y", "r_z", "q_w", "q_x", "q_y", "q_z"]
    + [f"contact_{leg}" for leg in LEG_NAMES]
    + [f"foothold_{leg}_{ax}" for leg in LEG_NAMES for ax in "xyz"]
    + ["solve_ms", "converged"]
)

GROUND_CLEARANCE = 0.02  # base height below this counts as a fall


class _Clock:
    """Wall clock or a deterministic stand-in for byte-stable logs."""

    def __init__(self, deterministic: bool):
        self._deterministic = deterministic
        self._fake = 0.0

    def __call__(self) -> float:
        if self._deterministic:
            self._fake += 1e-3
            return self._fake
        return time.perf_counter()


@dataclass
class SimState:
    """Ground-truth state of one robot at substep resolution."""

    model: str
    dt_sub: float
    mass: float
    r: np.ndarray
    r_prev: np.ndarray
    q: np.ndarray
    q_prev: np.ndarray

    @property
    def velocity(self) -> np.ndarray:
        return (self.r - self.r_prev) / self.dt_sub


def apply_disturbance(state: SimState, d: Disturbance) -> SimState:
    """Instantaneous velocity jump dv = impulse / mass; positions unchanged."""
    dv = np.asarray(d.impulse, dtype=float) / state.mass
    state.r_prev = state.r_prev - dv * state.dt_sub
    return state


@dataclass
class RobotPlanView:
    """Per-robot slice of a solved plan, in the robot's own layout."""

    schedule: GaitSchedule
    plan: ReferencePlan
    controls: np.ndarray  # (N, m)
    footholds: np.ndarray  # (F, 3)
    next_foothold_of_leg: np.ndarray  # (N, 4) foothold idx or -1

    def foothold_key(self, idx: int) -> tuple:
        info = self.schedule.index_map[idx]
        return (info.leg, info.cycle)


@dataclass
class PlanBundle:
    t: float
    stats: SolveStats
    robots: list
    degraded: bool


@dataclass
class MpcState:
    prev_controls: list | None = None  # per robot (N, m)
    prev_footholds: list | None = None  # per robot dict key -> (3,)
    prev_stance: list | None = None  # per robot list of per-step stance legs
    executed: list | None = None  # per robot dict key -> committed position
    prev_tick: int = 0
    t: float = 0.0


def _next_foothold_table(schedule: GaitSchedule) -> np.ndarray:
    N = schedule.N
    table = np.full((N, N_LEGS), -1, dtype=int)
    nxt = [-1] * N_LEGS
    for k in range(N - 1, -1, -1):
        for leg in range(N_LEGS):
            if schedule.foothold_of_leg[k, leg] >= 0:
                nxt[leg] = schedule.foothold_of_leg[k, leg]
            table[k, leg] = nxt[leg]
    return table


def _planner_state(scenario: Scenario, sim: SimState) -> np.ndarray:
    v = sim.velocity
    if scenario.model == "ipm":
        return np.concatenate([sim.r, sim.r - v * scenario.dt])
    omega = decode_omega(sim.q_prev, sim.q, sim.dt_sub)
    return srbm_initial_state(sim.r, v, sim.q, omega, scenario.dt)


def _build_problems(scenario: Scenario, measured: list, t: float, anchors: list):
    """One LocomotionProblem per robot at the current gait phase.

    ``anchors`` carries the nominal commanded pose per robot; anchoring the
    references there (instead of at the measured base) is what lets the
    pinned stance feet pull the robot back onto its commanded path after a
    disturbance.
    """
    problems = []
    for setup, x0, (anchor_pos, anchor_yaw) in zip(scenario.robots, measured, anchors):
        schedule = build_gait_schedule(
            scenario.gait, t, scenario.N, scenario.dt,
            require_stance=scenario.model == "ipm",
        )
        cmd = setup.command_at(t)
        gain = scenario.station_keeping_gain
        if gain > 0.0:
            # velocity-teleop drift compensation: steer the reference back
            # onto the commanded path when the base has been shoved off it
            err_world = np.asarray(anchor_pos[:2]) - np.asarray(x0[:2])
            c, s = np.cos(anchor_yaw), np.sin(anchor_yaw)
            err_body = np.array([c * err_world[0] + s * err_world[1],
                                 -s * err_world[0] + c * err_world[1]])
            corr = gain * err_body
            speed = float(np.linalg.norm(corr))
            cap = scenario.station_keeping_cap
            if speed > cap:
                corr *= cap / speed
            cmd = CommandInput(
                v_xy=(cmd.v_xy[0] + corr[0], cmd.v_xy[1] + corr[1]),
                yaw_rate=cmd.yaw_rate,
                target_height=cmd.target_height,
            )
        # footholds are referenced to the nominal commanded path, so "frozen
        # to references" means the undisturbed gait's stepping spots; the
        # velocity terms only see reference differences, so the anchor does
        # not dilute the station-keeping correction
        ref = build_reference_plan(
            cmd, schedule, anchor_pos, anchor_yaw,
            setup.params.hip_offsets, scenario.dt,
        )
        prob = assemble_locomotion_ocp(
            scenario.model, schedule, ref, [], x0, setup.params, scenario.dt
        )
        prob.costs.extend(scenario.terrain_costs(prob.dims))
        problems.append(prob)
    return problems


def _seed_outside_gaps(x: float, gaps, margin: float = 0.02) -> float:
    """Move a seed x-coordinate to the nearest gap edge when it is inside.

    Pure warm-start mode selection: the cost still references the original
    spot, so with the gap weight at zero the optimum walks straight back.
    """
    for gap in gaps:
        lo, hi = gap.g_x - gap.half_width, gap.g_x + gap.half_width
        if lo < x < hi:
            x = lo - margin if x - lo < hi - x else hi + margin
    return x


def _warm_start(problem, prev_controls, prev_footholds, executed, shift: int,
                gaps=(), prev_stance=None):
    """Shifted previous plan plus committed positions for planted feet.

    Returns the warm decision vector and the decision rows of footholds
    whose stance has already begun (they are physically planted and must
    stay fixed in the solve).
    """
    dims = problem.dims
    u = problem.u_init.copy()
    pinned_rows = []
    if prev_controls is not None:
        legs_now = problem.schedule.stance_legs()
        for k in range(dims.N):
            src = min(k + shift, prev_controls.shape[0] - 1)
            src_legs = prev_stance[min(src, len(prev_stance) - 1)]
            # carry a step's controls only when its stance set survived the
            # shift; otherwise the stale leg slots poison the start (e.g. a
            # repeated tail with weights on the wrong diagonal)
            if np.array_equal(src_legs, legs_now[k]):
                u[dims.u_slice(k)] = prev_controls[src]
    p0 = dims.N * dims.m
    for i, info in enumerate(problem.schedule.index_map):
        key = (info.leg, info.cycle)
        committed = executed.get(key) if executed else None
        if committed is not None:
            u[p0 + 3 * i : p0 + 3 * i + 3] = committed
            pinned_rows.extend(range(p0 + 3 * i, p0 + 3 * i + 3))
            continue
        if prev_footholds:
            carried = prev_footholds.get(key)
            if carried is not None:
                u[p0 + 3 * i : p0 + 3 * i + 3] = carried
                continue
        if gaps:
            u[p0 + 3 * i] = _seed_outside_gaps(float(u[p0 + 3 * i]), gaps)
    return u, np.array(pinned_rows, dtype=int)


def mpc_step(
    mpc: MpcState,
    measured: list,
    scenario: Scenario,
    t: float | None = None,
    anchors: list | None = None,
) -> tuple[PlanBundle, SolveStats]:
    """Rebuild, warm-start and solve the horizon problem at time t."""
    t = mpc.t if t is None else t
    tick = int(round(t / scenario.dt))
    shift = tick - mpc.prev_tick if mpc.prev_controls is not None else 0
    if anchors is None:
        anchors = [
            (x0[:3], quat_yaw(x0[6:10]) if scenario.model == "srbm" else setup.heading)
            for setup, x0 in zip(scenario.robots, measured)
        ]
    problems = _build_problems(scenario, measured, t, anchors)

    warm = []
    pinned = []
    for i, prob in enumerate(problems):
        u, rows = _warm_start(
            prob,
            None if mpc.prev_controls is None else mpc.prev_controls[i],
            None if mpc.prev_footholds is None else mpc.prev_footholds[i],
            None if mpc.executed is None else mpc.executed[i],
            shift,
            gaps=scenario.gaps if scenario.optimize_footholds else (),
            prev_stance=None if mpc.prev_stance is None else mpc.prev_stance[i],
        )
        warm.append(u)
        pinned.append(rows)

    if len(problems) == 1:
        prob = problems[0]
        model, costs, x0, u0 = prob.model, prob.costs, prob.x0, warm[0]
        fixed = prob.foothold_rows if not scenario.optimize_footholds else pinned[0]
        u_maps = [np.arange(prob.dims.nu)]
        x_maps = None
    else:
        pa, pb = problems
        model = MultiRobotModel(pa.model, pb.model)
        u_maps = [model.decision_index_map(0), model.decision_index_map(1)]
        x_maps = [model.state_index_map(0), model.state_index_map(1)]
        offsets = [0, pa.dims.n]
        costs = []
        for prob, u_map, x_map, off in zip(problems, u_maps, x_maps, offsets):
            costs.extend(
                EmbeddedCost(c, model.dims, x_map, u_map, off, prob.dims.n)
                for c in prob.costs
            )
        spec = scenario.multi_robot
        costs.append(
            CollisionCost(
                model.dims,
                offset_a=0,
                offset_b=pa.dims.n,
                min_distance=spec.min_distance if spec else 1.0,
            )
        )
        x0 = np.concatenate([pa.x0, pb.x0])
        u0 = np.empty(model.dims.nu)
        for u_map, w in zip(u_maps, warm):
            u0[u_map] = w
        if scenario.optimize_footholds:
            fixed = np.concatenate(
                [u_map[rows] for u_map, rows in zip(u_maps, pinned) if rows.size]
            ) if any(rows.size for rows in pinned) else None
        else:
            fixed = np.concatenate(
                [u_map[-prob.dims.p :] for u_map, prob in zip(u_maps, problems)]
            )

    degraded = False
    try:
        u_star, stats = solve(model, costs, x0, u0, scenario.solver, fixed_indices=fixed)
        degraded = not stats.converged
    except QuadMpcError:
        u_star = np.concatenate(warm) if len(problems) > 1 else warm[0]
        if len(problems) > 1:
            u_star = np.empty(model.dims.nu)
            for u_map, w in zip(u_maps, warm):
                u_star[u_map] = w
        stats = SolveStats(converged=False)
        degraded = True

    views = []
    new_controls = []
    new_footholds = []
    for prob, u_map in zip(problems, u_maps):
        dims = prob.dims
        u_r = u_star[u_map]
        controls = u_r[: dims.N * dims.m].reshape(dims.N, dims.m).copy()
        feet = u_r[dims.N * dims.m :].reshape(-1, 3).copy()
        view = RobotPlanView(
            schedule=prob.schedule,
            plan=prob.plan,
            controls=controls,
            footholds=feet,
            next_foothold_of_leg=_next_foothold_table(prob.schedule),
        )
        views.append(view)
        new_controls.append(controls)
        new_footholds.append(
            {view.foothold_key(i): feet[i].copy() for i in range(feet.shape[0])}
        )

    mpc.prev_controls = new_controls
    mpc.prev_footholds = new_footholds
    mpc.prev_stance = [prob.schedule.stance_legs() for prob in problems]
    mpc.prev_tick = tick
    mpc.t = t
    bundle = PlanBundle(t=t, stats=stats, robots=views, degraded=degraded)
    return bundle, stats


@dataclass
class TickRow:
    t: float
    r: list  # per robot (3,)
    q: list  # per robot (4,)
    contacts: list  # per robot (4,) bool
    leg_footholds: list  # per robot (4, 3)
    ref: list  # per robot (3,) nominal commanded position
    solve_ms: float
    converged: bool


@dataclass
class SimLog:
    scenario_name: str
    model: str
    n_robots: int
    dt: float
    dt_sub: float
    rows: list = field(default_factory=list)
    solves: list = field(default_factory=list)  # dicts per replan
    disturbances: list = field(default_factory=list)
    executed_footholds: list = field(default_factory=list)  # per robot {key: (s, s_ref)}
    failure: str | None = None

    def executed_positions(self, robot: int) -> np.ndarray:
        vals = [v[0] for v in self.executed_footholds[robot].values()]
        return np.array(vals).reshape(-1, 3)


def _nominal_reference(scenario: Scenario, robot: int, times: np.ndarray):
    """Commanded pose integrated from the start, ignoring execution."""
    setup = scenario.robots[robot]
    out = np.empty((len(times), 3))
    yaws = np.empty(len(times))
    pos = np.array([setup.start_xy[0], setup.start_xy[1], scenario.target_height])
    yaw = setup.heading
    prev_t = 0.0
    for i, t in enumerate(times):
        dt_i = t - prev_t
        cmd = setup.command_at(prev_t)
        c, s = np.cos(yaw), np.sin(yaw)
        vx, vy = cmd.v_xy
        pos = pos + np.array([c * vx - s * vy, s * vx + c * vy, 0.0]) * dt_i
        yaw += cmd.yaw_rate * dt_i
        prev_t = t
        out[i] = pos
        yaws[i] = yaw
    return out, yaws


def _project_simplex(w: np.ndarray) -> np.ndarray:
    """Euclidean projection onto { w : w >= 0, sum w = 1 }."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(w) + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[rho - 1] / rho
    return np.maximum(w - theta, 0.0)


def _substep(scenario: Scenario, sim: SimState, view: RobotPlanView, j: int, params):
    """Advance ground truth one substep using plan step j as control.

    The simulator is the physical side of the loop: CoP weights are
    projected onto the simplex (the CoP lives inside the support polygon by
    definition) and ground contact cannot pull, no matter how much
    soft-constraint slack the plan bought (pendulum thrust clamped to
    non-negative, rigid-body vertical forces clamped at zero).
    """
    u = view.controls[min(j, view.controls.shape[0] - 1)]
    feet_idx = view.schedule.stance_sets[min(j, view.schedule.N - 1)]
    legs = np.array(
        [view.schedule.index_map[i].leg for i in feet_idx], dtype=int
    )
    feet = view.footholds[feet_idx]
    dts = sim.dt_sub
    if scenario.model == "ipm":
        w = _project_simplex(u[1 + legs])
        g_norm = float(np.linalg.norm(params.gravity))
        hdd = max(float(u[0]), -g_norm)  # unilateral contact: rod can only push
        a = ipm_accel(sim.r, hdd, w, feet, params.gravity)
        r_new = 2.0 * sim.r - sim.r_prev + a * dts * dts
        sim.r_prev = sim.r
        sim.r = r_new
    else:
        forces = u.reshape(-1, 3)[legs].copy()
        forces[:, 2] = np.maximum(forces[:, 2], 0.0)
        a_t = srbm_translational_accel(forces, params)
        r_new = 2.0 * sim.r - sim.r_prev + a_t * dts * dts
        omega = decode_omega(sim.q_prev, sim.q, dts)
        omega_dot = srbm_angular_accel(sim.r, sim.q, omega, forces, feet, params)
        q_new = qnormalize(qmul(sim.q, quat_exp((omega + omega_dot * dts) * dts)))
        sim.r_prev, sim.r = sim.r, r_new
        sim.q_prev, sim.q = sim.q, q_new
    return sim


def simulate(
    scenario: Scenario,
    duration: float | None = None,
    replan_period: float | None = None,
) -> SimLog:
    """Run the MPC loop; deterministic for a fixed scenario."""
    duration = scenario.duration if duration is None else duration
    replan_period = (
        scenario.replan_period if replan_period is None else replan_period
    )
    dt = scenario.dt
    sub = scenario.substeps
    dt_sub = dt / sub
    replan_ticks = int(round(replan_period / dt))
    if replan_ticks < 1 or abs(replan_period - replan_ticks * dt) > 1e-9:
        raise ValueError("replan_period must be a positive multiple of dt")
    clock = _Clock(scenario.deterministic_timing)

    sims = []
    for setup in scenario.robots:
        r0 = np.array([setup.start_xy[0], setup.start_xy[1], scenario.target_height])
        q0 = yaw_quat(setup.heading)
        sims.append(
            SimState(
                model=scenario.model,
                dt_sub=dt_sub,
                mass=setup.params.mass,
                r=r0.copy(),
                r_prev=r0.copy(),
                q=q0.copy(),
                q_prev=q0.copy(),
            )
        )

    log = SimLog(
        scenario_name=scenario.name,
        model=scenario.model,
        n_robots=len(scenario.robots),
        dt=dt,
        dt_sub=dt_sub,
        executed_footholds=[{} for _ in scenario.robots],
    )

    total_subticks = int(round(duration / dt_sub))
    times = np.arange(total_subticks) * dt_sub
    nominal = []
    nominal_yaw = []
    for i in range(len(scenario.robots)):
        pos, yaw = _nominal_reference(scenario, i, times)
        nominal.append(pos)
        nominal_yaw.append(yaw)

    mpc = MpcState(executed=[{} for _ in scenario.robots])
    bundle: PlanBundle | None = None
    pending = sorted(scenario.disturbances, key=lambda d: d.t_apply)
    applied_subticks = {
        id(d): int(round(d.t_apply / dt_sub)) for d in pending
    }
    solve_ms = 0.0
    converged = True

    for subtick in range(total_subticks):
        t = subtick * dt_sub
        if subtick % (sub * replan_ticks) == 0:
            measured = [_planner_state(scenario, s) for s in sims]
            anchors = [
                (nominal[i][subtick], nominal_yaw[i][subtick])
                for i in range(len(sims))
            ]
            t0 = clock()
            try:
                bundle, stats = mpc_step(mpc, measured, scenario, t, anchors)
            except QuadMpcError as exc:
                log.failure = f"planning failed at t={t:.3f}: {exc}"
                break
            solve_ms = (clock() - t0) * 1e3
            converged = stats.converged
            log.solves.append(
                {
                    "t": round(t, 9),
                    "iterations": stats.iterations,
                    "converged": bool(stats.converged),
                    "cost": stats.final_cost,
                    "gradient_norm": stats.final_gradient_norm,
                    "solve_ms": solve_ms,
                }
            )
            plan_tick = subtick
            for rob, view in enumerate(bundle.robots):
                for k in range(replan_ticks):
                    if k >= view.schedule.N:
                        break
                    for idx in view.schedule.stance_sets[k]:
                        key = view.foothold_key(idx)
                        if key not in log.executed_footholds[rob]:
                            log.executed_footholds[rob][key] = (
                                view.footholds[idx].copy(),
                                view.plan.s_ref[idx].copy(),
                            )
                            mpc.executed[rob][key] = view.footholds[idx].copy()

        for d in pending:
            if applied_subticks[id(d)] == subtick:
                apply_disturbance(sims[d.robot], d)
                log.disturbances.append(
                    {"t": round(t, 9), "impulse": list(d.impulse), "robot": d.robot}
                )

        j = (subtick - plan_tick) // sub  # plan step consumed by this substep
        row = TickRow(
            t=round(t, 9),
            r=[s.r.copy() for s in sims],
            q=[s.q.copy() for s in sims],
            contacts=[
                view.schedule.contacts[min(j, view.schedule.N - 1)].copy()
                for view in bundle.robots
            ],
            leg_footholds=[_active_leg_footholds(view, j) for view in bundle.robots],
            ref=[nominal[i][subtick] for i in range(len(sims))],
            solve_ms=solve_ms,
            converged=converged,
        )
        log.rows.append(row)

        try:
            for sim_state, view, setup in zip(sims, bundle.robots, scenario.robots):
                _substep(scenario, sim_state, view, j, setup.params)
        except QuadMpcError as exc:
            log.failure = f"simulation diverged at t={t:.3f}: {exc}"
            break
        bad = [
            i
            for i, s in enumerate(sims)
            if not np.all(np.isfinite(s.r)) or s.r[2] < GROUND_CLEARANCE
        ]
        if bad:
            log.failure = f"robot {bad[0]} fell at t={t:.3f}"
            break

    return log


def _active_leg_footholds(view: RobotPlanView, j: int) -> np.ndarray:
    out = np.zeros((N_LEGS, 3))
    k = min(j, view.schedule.N - 1)
    for leg in range(N_LEGS):
        idx = view.next_foothold_of_leg[k, leg]
        if idx < 0:
            idx = view.schedule.foothold_of_leg[:, leg].max()
        if idx >= 0:
            out[leg] = view.footholds[idx]
    return out


# ---------------------------------------------------------------------------
# serialization


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _trajectory_csv(log: SimLog, robot: int) -> str:
    lines = [",".join(TRAJECTORY_COLUMNS)]
    for row in log.rows:
        vals = (
            [row.t]
            + list(row.r[robot])
            + list(row.q[robot])
            + list(row.contacts[robot])
            + list(row.leg_footholds[robot].ravel())
            + [row.solve_ms, row.converged]
        )
        lines.append(",".join(_fmt(v) for v in vals))
    return "\n".join(lines) + "\n"


def _percentile(values: list, q: float) -> float:
    if not values:
        return 0.0
    return float(np.percentile(np.array(values), q))


def summarize(log: SimLog, scenario: Scenario) -> dict:
    """Aggregate a SimLog into the JSON summary structure."""
    times = np.array([row.t for row in log.rows])
    solve_times = [s["solve_ms"] for s in log.solves]
    robots = []
    for i in range(log.n_robots):
        executed = np.array([row.r[i] for row in log.rows]).reshape(-1, 3)
        refs = np.array([row.ref[i] for row in log.rows]).reshape(-1, 3)
        err = np.linalg.norm(executed - refs, axis=1)
        feet = (
            log.executed_positions(i)
            if log.executed_footholds[i]
            else np.zeros((0, 3))
        )
        report = validate_footholds(feet, scenario.gaps, scenario.stones)
        robots.append(
            {
                "tracking_rms": float(np.sqrt(np.mean(err**2))) if len(err) else 0.0,
                "violations": report.as_dict(),
                "executed_footholds": [
                    {
                        "leg": int(key[0]),
                        "cycle": int(key[1]),
                        "position": [float(v) for v in pos],
                        "reference": [float(v) for v in ref],
                    }
                    for key, (pos, ref) in sorted(log.executed_footholds[i].items())
                ],
                "reference_path": [
                    [float(t), float(p[0]), float(p[1]), float(p[2])]
                    for t, p in zip(
                        times[:: max(1, len(times) // 400)],
                        [row.ref[i] for row in log.rows][
                            :: max(1, len(times) // 400)
                        ],
                    )
                ],
            }
        )
    out = {
        "scenario": log.scenario_name,
        "model": log.model,
        "n_robots": log.n_robots,
        "dt": log.dt,
        "duration": float(times[-1] + log.dt_sub) if len(times) else 0.0,
        "robots": robots,
        "solves": len(log.solves),
        "degraded_solves": int(sum(not s["converged"] for s in log.solves)),
        "solve_ms": {
            "p50": _percentile(solve_times, 50),
            "p95": _percentile(solve_times, 95),
            "max": max(solve_times) if solve_times else 0.0,
        },
        "disturbances": log.disturbances,
        "failure": log.failure,
    }
    if log.n_robots == 2:
        d = [
            float(np.linalg.norm(row.r[0] - row.r[1])) for row in log.rows
        ]
        out["min_inter_robot_distance"] = min(d) if d else None
    return out


def write_log(log: SimLog, scenario: Scenario, outdir: str | Path) -> dict:
    """Write trajectory.csv (+ trajectory_b.csv), summary.json; returns summary."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "trajectory.csv").write_text(_trajectory_csv(log, 0))
    if log.n_robots == 2:
        (outdir / "trajectory_b.csv").write_text(_trajectory_csv(log, 1))
    summary = summarize(log, scenario)
    (outdir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    return summary
