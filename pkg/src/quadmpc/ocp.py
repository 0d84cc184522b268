"""Finite-horizon optimal control over implicit discrete dynamics.

The decision vector U stacks the per-step controls u_0..u_{N-1} followed by
the time-invariant parameter block p (footholds). States are eliminated by
forward rollout; derivatives of the reduced objective J(X(U), U) come from
the trajectory sensitivity dX/dU, propagated by a block forward recursion
instead of ever forming the full constraint Jacobian.
"""

from __future__ import annotations

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import DivergedRolloutError, QuadMpcError, SingularDynamicsError

__all__ = [
    "ProblemDims",
    "StackedTrajectory",
    "StepJacobians",
    "SensitivityMatrix",
    "SolverOptions",
    "SolveStats",
    "DynamicsModel",
    "CostEval",
    "CostTerm",
    "rollout",
    "residuals",
    "sensitivity",
    "cost_value",
    "cost_gradient",
    "gn_hessian",
    "solve",
]


@dataclass(frozen=True)
class ProblemDims:
    """Per-step state/control sizes, parameter size, horizon and step length."""

    n: int
    m: int
    p: int
    N: int
    dt: float

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.N < 1:
            raise ValueError("n, m, N must be positive")
        if self.p < 0:
            raise ValueError("p must be non-negative")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")

    @property
    def nx(self) -> int:
        return self.N * self.n

    @property
    def nu(self) -> int:
        return self.N * self.m + self.p

    def x_slice(self, k: int) -> slice:
        """Rows of the stacked state vector holding x_k, k in 1..N."""
        if not 1 <= k <= self.N:
            raise IndexError(f"state index {k} outside 1..{self.N}")
        return slice((k - 1) * self.n, k * self.n)

    def u_slice(self, k: int) -> slice:
        """Rows of the decision vector holding u_k, k in 0..N-1."""
        if not 0 <= k < self.N:
            raise IndexError(f"control index {k} outside 0..{self.N - 1}")
        return slice(k * self.m, (k + 1) * self.m)

    @property
    def p_slice(self) -> slice:
        return slice(self.N * self.m, self.N * self.m + self.p)


@dataclass
class StackedTrajectory:
    """A rollout result bundled with the decisions that produced it."""

    X: np.ndarray
    U: np.ndarray
    x0: np.ndarray

    def state(self, dims: ProblemDims, k: int) -> np.ndarray:
        """x_k for k in 0..N; k = 0 returns the measurement."""
        if k == 0:
            return self.x0
        return self.X[dims.x_slice(k)]


@dataclass
class StepJacobians:
    """Blocks of dG_k: A = d/dx_k, E = d/dx_{k+1}, B = d/du_k, P = d/dp."""

    A: np.ndarray
    E: np.ndarray
    B: np.ndarray
    P: np.ndarray


class SensitivityMatrix:
    """dX/dU with exact zeros in the future-control blocks."""

    def __init__(self, dims: ProblemDims, S: np.ndarray):
        self.dims = dims
        self.S = S

    @property
    def full(self) -> np.ndarray:
        return self.S

    def state_rows(self, k: int) -> np.ndarray:
        """Row block for x_k, k in 1..N."""
        return self.S[self.dims.x_slice(k)]


@dataclass
class SolverOptions:
    max_iterations: int = 100
    gradient_tolerance: float = 1e-5
    step_tolerance: float = 1e-12
    levenberg_lambda: float = 1e-4
    line_search_shrink: float = 0.5
    line_search_min_step: float = 1e-8
    armijo_c: float = 1e-4
    # optional fourth stop rule for receding-horizon use: treat an accepted
    # step that improves the cost by less than this as converged (0 disables)
    improvement_tolerance: float = 0.0

    def __post_init__(self):
        if self.levenberg_lambda < 0.0:
            raise ValueError("levenberg_lambda must be >= 0")
        if not 0.0 < self.line_search_shrink < 1.0:
            raise ValueError("line_search_shrink must lie in (0, 1)")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")


@dataclass
class SolveStats:
    iterations: int = 0
    final_cost: float = np.inf
    final_gradient_norm: float = np.inf
    cost_history: list = field(default_factory=list)
    wall_time: float = 0.0
    converged: bool = False


class DynamicsModel(ABC):
    """Per-step implicit dynamics G_k(x_k, x_{k+1}, u_k, p) = 0.

    Explicit models implement ``step`` (the forward map g_k) and inherit
    residual/Jacobian defaults with E_k = I. Implicit models would override
    ``residual`` and ``step_jacobians`` and clear ``explicit``; none ship,
    but the solver path supports E_k != I.
    """

    dims: ProblemDims
    explicit: bool = True

    @abstractmethod
    def step(self, k: int, x: np.ndarray, u: np.ndarray, p: np.ndarray) -> np.ndarray:
        """Explicit forward map x_{k+1} = g_k(x_k, u_k, p)."""

    @abstractmethod
    def step_jacobians(
        self, k: int, x: np.ndarray, u: np.ndarray, p: np.ndarray
    ) -> StepJacobians:
        """Jacobian blocks of G_k evaluated on the rollout trajectory."""

    def residual(
        self, k: int, x: np.ndarray, x_next: np.ndarray, u: np.ndarray, p: np.ndarray
    ) -> np.ndarray:
        return x_next - self.step(k, x, u, p)


@dataclass
class CostEval:
    """Value and partial derivatives of one additive cost term.

    Absent blocks are None and treated as zero. ``hxx`` is either dense
    (N*n, N*n) or stacked per-step diagonal blocks (N, n, n) — every cost
    in this package couples states only within a single step. ``hxu`` has
    shape (N*n, N*m+p): the derivative of the X-gradient w.r.t. U.
    """

    value: float
    gx: np.ndarray | None = None
    gu: np.ndarray | None = None
    hxx: np.ndarray | None = None
    hxu: np.ndarray | None = None
    huu: np.ndarray | None = None


class CostTerm(ABC):
    """Additive objective contribution over the stacked (X, U)."""

    @abstractmethod
    def value(self, X: np.ndarray, U: np.ndarray) -> float:
        ...

    @abstractmethod
    def derivatives(self, X: np.ndarray, U: np.ndarray) -> CostEval:
        ...


def rollout(model: DynamicsModel, x0: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Forward-simulate the explicit map; raises on non-finite states."""
    dims = model.dims
    U = np.asarray(U, dtype=float)
    if U.shape != (dims.nu,):
        raise ValueError(f"U has shape {U.shape}, expected ({dims.nu},)")
    if not np.all(np.isfinite(U)):
        raise DivergedRolloutError(0, "decision vector contains non-finite entries")
    p = U[dims.p_slice]
    X = np.empty(dims.nx)
    x = np.asarray(x0, dtype=float)
    for k in range(dims.N):
        x = model.step(k, x, U[dims.u_slice(k)], p)
        # sum is nan/inf whenever any entry is; cheaper than a full isfinite scan
        if not np.isfinite(x.sum()):
            raise DivergedRolloutError(k, "state is non-finite")
        X[dims.x_slice(k + 1)] = x
    return X


def residuals(
    model: DynamicsModel, X: np.ndarray, U: np.ndarray, x0: np.ndarray
) -> np.ndarray:
    """Stacked G(X, U); block k couples x_k and x_{k+1}."""
    dims = model.dims
    if X.shape != (dims.nx,) or U.shape != (dims.nu,):
        raise ValueError("inconsistent stacked dimensions")
    p = U[dims.p_slice]
    G = np.empty(dims.nx)
    x_prev = np.asarray(x0, dtype=float)
    for k in range(dims.N):
        x_next = X[dims.x_slice(k + 1)]
        G[dims.x_slice(k + 1)] = model.residual(k, x_prev, x_next, U[dims.u_slice(k)], p)
        x_prev = x_next
    return G


def sensitivity(
    model: DynamicsModel, X: np.ndarray, U: np.ndarray, x0: np.ndarray
) -> SensitivityMatrix:
    """dX/dU by forward block recursion over the step Jacobians.

    Exploits the block lower-triangular constraint Jacobian: the row block
    for x_{k+1} only needs the previous block and the k-th step Jacobians,
    never an inverse of the full system.
    """
    dims = model.dims
    p = U[dims.p_slice]
    S = np.zeros((dims.nx, dims.nu))
    ps = dims.p_slice
    x_prev = np.asarray(x0, dtype=float)
    s_prev = None  # row block of x_k; None encodes the zero block for x_0
    for k in range(dims.N):
        jac = model.step_jacobians(k, x_prev, U[dims.u_slice(k)], p)
        rows = S[dims.x_slice(k + 1)]
        if s_prev is not None:
            # columns for u_0..u_{k-1} and the parameter block are live
            live = slice(0, k * dims.m)
            rows[:, live] = jac.A @ s_prev[:, live]
            rows[:, ps] = jac.A @ s_prev[:, ps]
        rows[:, dims.u_slice(k)] += jac.B
        if dims.p > 0:
            rows[:, ps] += jac.P
        if model.explicit:
            rows *= -1.0
        else:
            try:
                rows[:] = scipy.linalg.solve(jac.E, -rows)
            except scipy.linalg.LinAlgError as exc:
                raise SingularDynamicsError(k) from exc
        s_prev = rows
        x_prev = X[dims.x_slice(k + 1)]
    return SensitivityMatrix(dims, S)


def cost_value(costs: list[CostTerm], X: np.ndarray, U: np.ndarray) -> float:
    return float(sum(c.value(X, U) for c in costs))


def _accumulate_derivatives(costs, X, U, dims):
    """One pass over the terms; hxx kept as stacked (N, n, n) blocks."""
    gx = np.zeros(dims.nx)
    gu = np.zeros(dims.nu)
    hxx = np.zeros((dims.N, dims.n, dims.n))
    hxx_dense = None
    hxu = None
    huu = np.zeros((dims.nu, dims.nu))
    value = 0.0
    for c in costs:
        ev = c.derivatives(X, U)
        value += ev.value
        if ev.gx is not None:
            gx += ev.gx
        if ev.gu is not None:
            gu += ev.gu
        if ev.hxx is not None:
            if ev.hxx.ndim == 3:
                hxx += ev.hxx
            else:
                hxx_dense = ev.hxx if hxx_dense is None else hxx_dense + ev.hxx
        if ev.hxu is not None:
            hxu = ev.hxu if hxu is None else hxu + ev.hxu
        if ev.huu is not None:
            huu += ev.huu
    return value, gx, gu, hxx, hxx_dense, hxu, huu


def cost_gradient(
    costs: list[CostTerm], X: np.ndarray, U: np.ndarray, S: SensitivityMatrix
) -> np.ndarray:
    """Total derivative dJ/dU = (dJ/dX) S + dJ/dU."""
    dims = S.dims
    _, gx, gu, _, _, _, _ = _accumulate_derivatives(costs, X, U, dims)
    return gx @ S.full + gu


def _gn_from_blocks(S: SensitivityMatrix, hxx, hxx_dense, hxu, huu) -> np.ndarray:
    dims = S.dims
    Sf = S.full
    S_steps = Sf.reshape(dims.N, dims.n, dims.nu)
    weighted = np.einsum("kij,kjn->kin", hxx, S_steps).reshape(dims.nx, dims.nu)
    H = Sf.T @ weighted + huu
    if hxx_dense is not None:
        H += Sf.T @ hxx_dense @ Sf
    if hxu is not None:
        cross = Sf.T @ hxu
        H += cross + cross.T
    return 0.5 * (H + H.T)


def gn_hessian(
    costs: list[CostTerm], X: np.ndarray, U: np.ndarray, S: SensitivityMatrix
) -> np.ndarray:
    """Generalized Gauss-Newton approximation of d2J/dU2.

    Drops the dS/dU curvature term; with each cost term supplying
    positive-semidefinite partial blocks the result is PSD.
    """
    dims = S.dims
    _, _, _, hxx, hxx_dense, hxu, huu = _accumulate_derivatives(costs, X, U, dims)
    return _gn_from_blocks(S, hxx, hxx_dense, hxu, huu)


def _try_rollout(model, x0, U):
    try:
        return rollout(model, x0, U)
    except QuadMpcError:
        return None


def solve(
    model: DynamicsModel,
    costs: list[CostTerm],
    x0: np.ndarray,
    U_init: np.ndarray,
    opts: SolverOptions | None = None,
    fixed_indices: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveStats]:
    """Damped Gauss-Newton with backtracking Armijo line search.

    ``fixed_indices`` pins decision entries (used to freeze footholds); the
    reduced normal equations are solved over the free set only.
    """
    opts = opts or SolverOptions()
    dims = model.dims
    t_start = time.perf_counter()

    U = np.array(U_init, dtype=float)
    X = rollout(model, x0, U)
    J = cost_value(costs, X, U)

    free = np.ones(dims.nu, dtype=bool)
    if fixed_indices is not None:
        free[np.asarray(fixed_indices, dtype=int)] = False

    stats = SolveStats(cost_history=[J])
    for _ in range(opts.max_iterations):
        S = sensitivity(model, X, U, x0)
        _, gx, gu, hxx, hxx_d, hxu, huu = _accumulate_derivatives(costs, X, U, dims)
        g = gx @ S.full + gu
        g_free = g[free]
        stats.final_gradient_norm = float(np.max(np.abs(g_free), initial=0.0))
        if stats.final_gradient_norm < opts.gradient_tolerance:
            stats.converged = True
            break

        H = _gn_from_blocks(S, hxx, hxx_d, hxu, huu)
        Hf = H[np.ix_(free, free)] + opts.levenberg_lambda * np.eye(int(free.sum()))
        try:
            c_fac = scipy.linalg.cho_factor(Hf, check_finite=False)
            d_free = scipy.linalg.cho_solve(c_fac, -g_free, check_finite=False)
        except scipy.linalg.LinAlgError:
            d_free = np.linalg.lstsq(Hf, -g_free, rcond=None)[0]
        delta = np.zeros(dims.nu)
        delta[free] = d_free

        slope = float(g_free @ d_free)
        if slope >= 0.0:
            # damped GN produced no descent direction; bail with best-so-far
            break

        alpha = 1.0
        accepted = False
        while alpha >= opts.line_search_min_step:
            U_trial = U + alpha * delta
            X_trial = _try_rollout(model, x0, U_trial)
            if X_trial is not None:
                J_trial = cost_value(costs, X_trial, U_trial)
                if np.isfinite(J_trial) and J_trial <= J + opts.armijo_c * alpha * slope:
                    accepted = True
                    break
            alpha *= opts.line_search_shrink
        if not accepted:
            break

        step_inf = float(np.max(np.abs(alpha * delta), initial=0.0))
        improvement = J - J_trial
        U, X, J = U_trial, X_trial, J_trial
        stats.iterations += 1
        stats.cost_history.append(J)
        if step_inf < opts.step_tolerance:
            stats.converged = True
            break
        if 0.0 < improvement < opts.improvement_tolerance:
            stats.converged = True
            break

    stats.final_cost = J
    stats.wall_time = time.perf_counter() - t_start
    return U, stats
