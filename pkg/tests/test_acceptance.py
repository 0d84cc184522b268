"""Acceptance suite: every release criterion at its stated tolerance.

Run with `pytest -v -s tests/test_acceptance.py` to get one pass/fail line
per criterion. The scenario-level checks run full receding-horizon
simulations and take a couple of minutes in total.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import make_problem
from quadmpc.locomotion import GaitSpec, initial_state
from quadmpc.models.srbm import decode_omega, srbm_angular_accel, srbm_initial_state, srbm_step
from quadmpc.ocp import cost_gradient, gn_hessian, rollout, sensitivity, solve
from quadmpc.robot import RobotParams
from quadmpc.scenarios import bundled_scenario_path, load_scenario, validate_footholds
from quadmpc.simloop import MpcState, _planner_state, mpc_step, simulate, summarize
from quadmpc.smooth import SmoothPlusParams, smooth_plus, smooth_plus_d1, smooth_plus_d2
from quadmpc.verify import check_derivatives, fd_cost_gradient, rel_error


@contextmanager
def criterion(name):
    try:
        yield
        print(f"\n[ACCEPTANCE] PASS {name}")
    except Exception:
        print(f"\n[ACCEPTANCE] FAIL {name}")
        raise


def test_sensitivity_oracle_100_instances():
    with criterion("sensitivity matches central finite differences "
                   "(100 random instances per model, rel err < 1e-5, < 60 s)"):
        t0 = time.perf_counter()
        worst = {}
        for kind in ("ipm", "srbm"):
            worst[kind] = check_derivatives(kind, trials=100, seed=7,
                                            gradient_trials=0)["sensitivity"]
        elapsed = time.perf_counter() - t0
        print(f"  max rel err: ipm {worst['ipm']:.2e}, srbm {worst['srbm']:.2e}; "
              f"runtime {elapsed:.1f}s")
        assert worst["ipm"] < 1e-5
        assert worst["srbm"] < 1e-5
        assert elapsed < 60.0


def test_gradient_and_gn_hessian_oracle(robot):
    with criterion("cost gradient matches finite differences; GN Hessian "
                   "symmetric to 1e-12 and PSD to -1e-8"):
        for kind in ("ipm", "srbm"):
            res = check_derivatives(kind, trials=10, seed=11)
            assert res["gradient"] < 1e-5, kind
        rng = np.random.default_rng(3)
        from quadmpc.verify import random_problem

        for kind in ("ipm", "srbm"):
            for _ in range(5):
                prob, U, X = random_problem(kind, rng)
                S = sensitivity(prob.model, X, U, prob.x0)
                H = gn_hessian(prob.costs, X, U, S)
                assert np.max(np.abs(H - H.T)) <= 1e-12
                assert np.min(np.linalg.eigvalsh(H)) >= -1e-8


def test_smooth_penalty_branches():
    with criterion("smooth penalty: C2 branch agreement at the knots to "
                   "1e-10, non-negative, zero iff past the blend"):
        e = 0.1
        sp = SmoothPlusParams(r=0.0, eps=e)
        cubic = lambda g: -(g**3) / (6 * e) + 0.5 * g * g - 0.5 * e * g + e * e / 6
        cubic_d1 = lambda g: -(g * g) / (2 * e) + g - 0.5 * e
        cubic_d2 = lambda g: 1.0 - g / e
        assert abs(cubic(e) - 0.0) <= 1e-10
        assert abs(cubic_d1(e) - 0.0) <= 1e-10
        assert abs(cubic_d2(e) - 0.0) <= 1e-10
        assert abs(cubic(-e) - (e * e + e * e / 3)) <= 1e-10
        assert abs(cubic_d1(-e) - (-2 * e)) <= 1e-10
        assert abs(cubic_d2(-e) - 2.0) <= 1e-10
        xs = np.linspace(-1, 1, 20001)
        vals = smooth_plus(xs, sp)
        assert np.all(vals >= 0)
        assert np.all((vals == 0) == (xs >= e - 1e-15))
        # implementation agrees with the closed branch forms at the knots
        for fn, ref in ((smooth_plus, cubic), (smooth_plus_d1, cubic_d1),
                        (smooth_plus_d2, cubic_d2)):
            for g in (e - 1e-14, -e + 1e-14):
                assert abs(fn(g, sp) - ref(g)) <= 1e-10


def test_quaternion_integrity():
    with criterion("1000-step rollouts keep |q|-1 <= 1e-9; torque-free "
                   "principal-axis spin keeps the body rate constant to "
                   "1e-12 per step"):
        params = RobotParams(
            mass=12.0, inertia_body=np.diag([0.017, 0.056, 0.065]),
            hip_offsets=np.array([[0.183, 0.132, 0], [0.183, -0.132, 0],
                                  [-0.183, 0.132, 0], [-0.183, -0.132, 0]]),
        )
        dt = 0.04
        rng = np.random.default_rng(5)
        # vigorous random forces: unit norm must hold throughout
        x = srbm_initial_state([0, 0, 0.3], rng.uniform(-0.2, 0.2, 3),
                               [1, 0, 0, 0], rng.uniform(-2, 2, 3), dt)
        r, r_prev, q, q_prev = x[:3], x[3:6], x[6:10], x[10:14]
        for _ in range(1000):
            forces = rng.uniform(-4, 4, (2, 3)) + [0, 0, params.mass * 9.81 / 2]
            feet = r + [[0.2, 0.15, -0.3], [-0.2, -0.15, -0.3]]
            r_new, q_new = srbm_step(r, r_prev, q, q_prev, forces, feet, dt, params)
            r_prev, r, q_prev, q = r, r_new, q, q_new
            assert abs(np.linalg.norm(q) - 1.0) <= 1e-9

        # gyroscopic term vanishes identically on a principal axis
        for rate in (5.0, 0.5):
            wd = srbm_angular_accel(np.zeros(3), np.array([1.0, 0, 0, 0]),
                                    np.array([0, 0, rate]), np.zeros((0, 3)),
                                    np.zeros((0, 3)), params)
            assert np.max(np.abs(wd)) <= 1e-15
        # decoded rate constant per step at a rate where the pair decode
        # error of the scheme sits below the tolerance
        omega = np.array([0.0, 0.0, 1e-3])
        x = srbm_initial_state([0, 0, 0.3], np.zeros(3), [1, 0, 0, 0], omega, dt)
        r, r_prev, q, q_prev = x[:3], x[3:6], x[6:10], x[10:14]
        hover = np.array([[0.0, 0.0, params.mass * 9.81]])
        prev_rate = np.linalg.norm(decode_omega(q_prev, q, dt))
        for _ in range(1000):
            r_new, q_new = srbm_step(r, r_prev, q, q_prev, hover, np.array([r]), dt, params)
            r_prev, r, q_prev, q = r, r_new, q, q_new
            rate = np.linalg.norm(decode_omega(q_prev, q, dt))
            assert abs(rate - prev_rate) <= 1e-12
            prev_rate = rate


def test_equilibrium_stationarity(robot):
    with criterion("stand-gait hover: gradient norm < 1e-6 and the solver "
                   "terminates in <= 1 iteration"):
        prob = make_problem("ipm", robot, gait=GaitSpec.stand())
        X = rollout(prob.model, prob.x0, prob.u_init)
        S = sensitivity(prob.model, X, prob.u_init, prob.x0)
        g = cost_gradient(prob.costs, X, prob.u_init, S)
        assert np.max(np.abs(g)) < 1e-6
        _, stats = solve(prob.model, prob.costs, prob.x0, prob.u_init)
        assert stats.iterations <= 1
        assert stats.converged


def test_push_recovery_comparative():
    with criterion("push recovery: 6 N*s lateral impulse - optimized "
                   "footholds return within 5 cm of nominal within 2 s; "
                   "frozen footholds violate the bound"):
        results = {}
        for optimize in (True, False):
            sc = load_scenario(
                bundled_scenario_path("push_recovery"),
                {"optimize_footholds": "true" if optimize else "false"},
            )
            log = simulate(sc)
            r = np.array([row.r[0] for row in log.rows])
            t = np.array([row.t for row in log.rows])
            mask = t >= 2.0 + 2.0
            dist = np.linalg.norm(r[:, :2], axis=1)
            after = float(dist[mask].max()) if mask.any() else np.inf
            results[optimize] = (log.failure, after)
        fail_opt, after_opt = results[True]
        fail_frz, after_frz = results[False]
        print(f"  optimized: after-2s max {after_opt:.3f} m; "
              f"frozen: {'fell' if fail_frz else f'{after_frz:.3f} m'}")
        assert fail_opt is None
        assert after_opt <= 0.05
        assert fail_frz is not None or after_frz > 0.05


def test_gap_crossing():
    with criterion("gap crossing: zero foothold-in-gap violations over a "
                   "10 s run; removing the gap weight causes violations"):
        sc = load_scenario(bundled_scenario_path("gap"))
        log = simulate(sc)
        report = validate_footholds(log.executed_positions(0), sc.gaps, None)
        assert log.failure is None
        assert report.gap_violations == 0
        sc0 = load_scenario(bundled_scenario_path("gap"), {"terrain.gap_weight": "0.0"})
        log0 = simulate(sc0)
        report0 = validate_footholds(log0.executed_positions(0), sc0.gaps, None)
        print(f"  violations: weighted {report.gap_violations}/{report.total}, "
              f"weight-off {report0.gap_violations}/{report0.total}")
        assert report0.gap_violations >= 1


def test_stepping_stones():
    with criterion("stepping stones: >= 95% of footholds within the 0.06 m "
                   "radius on a 20 cm grid"):
        sc = load_scenario(bundled_scenario_path("stones"))
        log = simulate(sc)
        report = validate_footholds(log.executed_positions(0), [], sc.stones)
        on_stone = report.total - report.stone_violations
        print(f"  on-stone: {on_stone}/{report.total}")
        assert log.failure is None
        assert report.total >= 20
        assert on_stone / report.total >= 0.95


def test_two_robot_coupling():
    with criterion("two-robot crossing solved as one OCP keeps at least "
                   "0.9 m of separation"):
        sc = load_scenario(bundled_scenario_path("two_robot"))
        log = simulate(sc)
        summary = summarize(log, sc)
        print(f"  min inter-robot distance: {summary['min_inter_robot_distance']:.3f} m")
        assert log.failure is None
        assert summary["min_inter_robot_distance"] >= 0.9


def _warm_solve_times(scenario_name, n_solves):
    sc = load_scenario(bundled_scenario_path(scenario_name))
    from quadmpc.quat import yaw_quat
    from quadmpc.simloop import SimState

    setup = sc.robots[0]
    r0 = np.array([setup.start_xy[0], setup.start_xy[1], sc.target_height])
    sim = SimState(model=sc.model, dt_sub=sc.dt / sc.substeps,
                   mass=setup.params.mass, r=r0.copy(), r_prev=r0.copy(),
                   q=yaw_quat(setup.heading), q_prev=yaw_quat(setup.heading))
    measured = [_planner_state(sc, sim)]
    mpc = MpcState(executed=[{}])
    mpc_step(mpc, measured, sc, 0.0)  # cold start excluded
    times = []
    for i in range(1, n_solves + 1):
        t0 = time.perf_counter()
        mpc_step(mpc, measured, sc, i * sc.dt)
        times.append((time.perf_counter() - t0) * 1e3)
    return float(np.percentile(times, 95))


def test_throughput_budget():
    with criterion("throughput: warm-start solve p95 - IPM < 20 ms, "
                   "SRBM < 60 ms (N=20)"):
        p95_ipm = _warm_solve_times("trot", 40)
        p95_srbm = _warm_solve_times("srbm_trot", 40)
        print(f"  p95 warm solve: ipm {p95_ipm:.1f} ms, srbm {p95_srbm:.1f} ms")
        assert p95_ipm < 20.0
        assert p95_srbm < 60.0
