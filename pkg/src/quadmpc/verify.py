"""Finite-difference oracles for derivatives, plus random problem instances.

Everything here checks analytic derivatives against central differences of
the forward rollout only, keeping the oracle independent of the sensitivity
recursion it validates.
"""

from __future__ import annotations

import numpy as np

from .locomotion import (
    CommandInput,
    GaitSpec,
    assemble_locomotion_ocp,
    build_gait_schedule,
    build_reference_plan,
    initial_state,
)
from .ocp import cost_gradient, cost_value, rollout, sensitivity
from .robot import default_robot_params

__all__ = [
    "rel_error",
    "fd_rollout_jacobian",
    "fd_cost_gradient",
    "fd_step_jacobian",
    "random_problem",
    "check_derivatives",
]

FD_STEP = 1e-6


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    """Max absolute deviation scaled by the reference magnitude (floor 1)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 0.0)
    diff = float(np.max(np.abs(a - b))) if a.size else 0.0
    return diff / scale


def fd_rollout_jacobian(model, x0, U, h: float = FD_STEP) -> np.ndarray:
    """Central differences of rollout w.r.t. every decision entry.

    Perturbing u_k leaves the states before step k bitwise unchanged (the
    rollout consumes u_k only at step k), so those rows difference to zero
    exactly and only the suffix is re-integrated.
    """
    dims = model.dims
    cols = np.zeros((dims.nx, dims.nu))
    X = rollout(model, x0, U)
    step_inputs = [np.asarray(x0, dtype=float)] + [
        X[dims.x_slice(k)] for k in range(1, dims.N)
    ]
    p = U[dims.p_slice]

    def suffix(k_from, u_vec, p_vec):
        x = step_inputs[k_from]
        out = np.empty((dims.N - k_from, dims.n))
        for k in range(k_from, dims.N):
            x = model.step(k, x, u_vec[dims.u_slice(k)], p_vec)
            out[k - k_from] = x
        return out

    for k in range(dims.N):
        us = dims.u_slice(k)
        for i in range(us.start, us.stop):
            up = U.copy()
            um = U.copy()
            up[i] += h
            um[i] -= h
            diff = (suffix(k, up, p) - suffix(k, um, p)) / (2.0 * h)
            cols[k * dims.n :, i] = diff.ravel()
    for i in range(dims.p_slice.start, dims.p_slice.stop):
        up = U.copy()
        um = U.copy()
        up[i] += h
        um[i] -= h
        pp = up[dims.p_slice]
        pm = um[dims.p_slice]
        diff = (suffix(0, up, pp) - suffix(0, um, pm)) / (2.0 * h)
        cols[:, i] = diff.ravel()
    return cols


def fd_cost_gradient(costs, model, x0, U, h: float = FD_STEP) -> np.ndarray:
    """Central differences of the reduced objective J(X(U), U)."""

    def total(u):
        return cost_value(costs, rollout(model, x0, u), u)

    g = np.empty(U.shape[0])
    for i in range(U.shape[0]):
        up = U.copy()
        um = U.copy()
        up[i] += h
        um[i] -= h
        g[i] = (total(up) - total(um)) / (2.0 * h)
    return g


def fd_step_jacobian(model, k, x, u, p, h: float = FD_STEP):
    """Central differences of one explicit step w.r.t. (x, u, p)."""

    def diff(vec, i):
        vp = vec.copy()
        vm = vec.copy()
        vp[i] += h
        vm[i] -= h
        return vp, vm

    n = model.dims.n
    dx = np.empty((n, x.shape[0]))
    for i in range(x.shape[0]):
        xp, xm = diff(x, i)
        dx[:, i] = (model.step(k, xp, u, p) - model.step(k, xm, u, p)) / (2 * h)
    du = np.empty((n, u.shape[0]))
    for i in range(u.shape[0]):
        up, um = diff(u, i)
        du[:, i] = (model.step(k, x, up, p) - model.step(k, x, um, p)) / (2 * h)
    dp = np.empty((n, p.shape[0]))
    for i in range(p.shape[0]):
        pp, pm = diff(p, i)
        dp[:, i] = (model.step(k, x, u, pp) - model.step(k, x, u, pm)) / (2 * h)
    return dx, du, dp


def random_problem(model_kind: str, rng: np.random.Generator, N: int = 20):
    """A feasible random locomotion instance with perturbed decisions."""
    dt = 0.04
    params = default_robot_params()
    for _ in range(50):
        phase = float(rng.integers(0, 10)) * dt
        schedule = build_gait_schedule(
            GaitSpec.trot(), phase, N, dt, require_stance=model_kind == "ipm"
        )
        cmd = CommandInput(
            v_xy=(float(rng.uniform(-0.3, 0.3)), float(rng.uniform(-0.3, 0.3))),
            yaw_rate=float(rng.uniform(-0.5, 0.5)),
            target_height=0.3,
        )
        r0 = np.array([rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 0.3])
        v0 = rng.uniform(-0.2, 0.2, size=3)
        if model_kind == "ipm":
            x0 = initial_state("ipm", r0, v0, dt)
        else:
            omega0 = rng.uniform(-0.5, 0.5, size=3)
            x0 = initial_state("srbm", r0, v0, dt, omega0=omega0)
        plan = build_reference_plan(
            cmd, schedule, r0, 0.0, params.hip_offsets, dt
        )
        problem = assemble_locomotion_ocp(
            model_kind, schedule, plan, [], x0, params, dt
        )
        dims = problem.dims
        U = problem.u_init.copy()
        for k in range(N):
            us = dims.u_slice(k)
            if model_kind == "ipm":
                U[us.start] += rng.uniform(-0.5, 0.5)
                U[us.start + 1 : us.stop] += rng.uniform(-0.08, 0.08, size=4)
            else:
                U[us] += rng.uniform(-8.0, 8.0, size=dims.m)
        U[dims.p_slice] += rng.uniform(-0.03, 0.03, size=dims.p)
        try:
            X = rollout(problem.model, problem.x0, U)
        except Exception:
            continue
        if np.max(np.abs(X)) < 50.0:
            return problem, U, X
    raise RuntimeError("could not draw a stable random instance")


def check_derivatives(
    model_kind: str,
    trials: int,
    seed: int = 0,
    N: int = 20,
    gradient_trials: int | None = None,
) -> dict:
    """Max sensitivity/gradient FD errors over random instances.

    The gradient check costs another 2*nu rollouts per instance, so its
    trial count can be reduced independently.
    """
    rng = np.random.default_rng(seed)
    if gradient_trials is None:
        gradient_trials = trials
    worst_s = 0.0
    worst_g = 0.0
    for trial in range(trials):
        problem, U, X = random_problem(model_kind, rng, N=N)
        S = sensitivity(problem.model, X, U, problem.x0)
        fd_S = fd_rollout_jacobian(problem.model, problem.x0, U)
        worst_s = max(worst_s, rel_error(S.full, fd_S))
        if trial < gradient_trials:
            g = cost_gradient(problem.costs, X, U, S)
            fd_g = fd_cost_gradient(problem.costs, problem.model, problem.x0, U)
            worst_g = max(worst_g, rel_error(g, fd_g))
    return {"sensitivity": worst_s, "gradient": worst_g}
