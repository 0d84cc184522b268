import numpy as np
import pytest

from quadmpc.exceptions import DivergedRolloutError
from quadmpc.ocp import (
    CostEval,
    CostTerm,
    DynamicsModel,
    ProblemDims,
    SolverOptions,
    StepJacobians,
    cost_gradient,
    cost_value,
    gn_hessian,
    residuals,
    rollout,
    sensitivity,
    solve,
)


class ScalarLinear(DynamicsModel):
    """x_{k+1} = a x_k + b u_k; the textbook check for the stacked machinery."""

    def __init__(self, a=2.0, b=1.0, N=2):
        self.a, self.b = a, b
        self.dims = ProblemDims(n=1, m=1, p=0, N=N, dt=1.0)

    def step(self, k, x, u, p):
        return self.a * x + self.b * u

    def step_jacobians(self, k, x, u, p):
        return StepJacobians(
            A=np.array([[-self.a]]),
            E=np.eye(1),
            B=np.array([[-self.b]]),
            P=np.zeros((1, 0)),
        )


class StateSquareCost(CostTerm):
    """J = 0.5 ||X||^2."""

    def __init__(self, dims):
        self.dims = dims

    def value(self, X, U):
        return 0.5 * float(X @ X)

    def derivatives(self, X, U):
        hxx = np.repeat(np.eye(self.dims.n)[None], self.dims.N, axis=0)
        return CostEval(value=self.value(X, U), gx=X.copy(), hxx=hxx)


class TrackingQuadratic(CostTerm):
    """J = ||X - X_ref||^2 + rho ||U||^2, exact GN case."""

    def __init__(self, dims, x_ref, rho=1e-3):
        self.dims = dims
        self.x_ref = x_ref
        self.rho = rho

    def value(self, X, U):
        d = X - self.x_ref
        return float(d @ d + self.rho * (U @ U))

    def derivatives(self, X, U):
        d = X - self.x_ref
        hxx = 2.0 * np.repeat(np.eye(self.dims.n)[None], self.dims.N, axis=0)
        return CostEval(
            value=self.value(X, U),
            gx=2.0 * d,
            gu=2.0 * self.rho * U,
            hxx=hxx,
            huu=2.0 * self.rho * np.eye(self.dims.nu),
        )


X0 = np.array([1.0])
U11 = np.array([1.0, 1.0])


def test_rollout_hand_values():
    assert np.allclose(rollout(ScalarLinear(), X0, U11), [3.0, 7.0])


def test_rollout_rejects_nan():
    with pytest.raises(DivergedRolloutError):
        rollout(ScalarLinear(), X0, np.array([np.nan, 1.0]))


def test_rollout_diverged_reports_step():
    class Explode(ScalarLinear):
        def step(self, k, x, u, p):
            return x * (np.inf if k == 1 else 1.0)

    with pytest.raises(DivergedRolloutError) as err:
        rollout(Explode(N=3), X0, np.zeros(3))
    assert err.value.step == 1


def test_residuals_zero_on_rollout():
    m = ScalarLinear()
    X = rollout(m, X0, U11)
    assert np.max(np.abs(residuals(m, X, U11, X0))) <= 1e-12


def test_residuals_perturbation():
    m = ScalarLinear()
    X = rollout(m, X0, U11)
    delta = 0.37
    Xp = X.copy()
    Xp[0] += delta
    G = residuals(m, Xp, U11, X0)
    assert G[0] == pytest.approx(delta)
    assert G[1] == pytest.approx(-2.0 * delta)


def test_residuals_single_step_horizon():
    m = ScalarLinear(N=1)
    U = np.array([0.5])
    X = rollout(m, X0, U)
    assert X.shape == (1,)
    assert residuals(m, X, U, X0)[0] == pytest.approx(0.0)


def test_sensitivity_hand_values():
    m = ScalarLinear()
    X = rollout(m, X0, U11)
    S = sensitivity(m, X, U11, X0).full
    assert np.allclose(S, [[1.0, 0.0], [2.0, 1.0]])


def test_sensitivity_causality_zeros(ipm_problem):
    prob = ipm_problem
    X = rollout(prob.model, prob.x0, prob.u_init)
    S = sensitivity(prob.model, X, prob.u_init, prob.x0)
    dims = prob.dims
    for k in range(1, dims.N + 1):
        rows = S.state_rows(k)
        future = rows[:, k * dims.m : dims.N * dims.m]
        assert np.all(future == 0.0)


def test_cost_gradient_is_st_x():
    m = ScalarLinear()
    X = rollout(m, X0, U11)
    S = sensitivity(m, X, U11, X0)
    g = cost_gradient([StateSquareCost(m.dims)], X, U11, S)
    assert np.allclose(g, S.full.T @ X)


def test_zero_cost_zero_derivatives():
    class Zero(CostTerm):
        def value(self, X, U):
            return 0.0

        def derivatives(self, X, U):
            return CostEval(value=0.0)

    m = ScalarLinear()
    X = rollout(m, X0, U11)
    S = sensitivity(m, X, U11, X0)
    assert np.allclose(cost_gradient([Zero()], X, U11, S), 0.0)
    assert np.allclose(gn_hessian([Zero()], X, U11, S), 0.0)


def test_gn_exact_for_quadratic_cost_linear_dynamics():
    # with linear dynamics and quadratic cost the GN matrix is the true
    # Hessian; verify against second differences of the reduced objective
    m = ScalarLinear(a=0.7, b=1.3, N=4)
    x_ref = np.array([1.0, 0.5, 0.2, 0.1])
    cost = TrackingQuadratic(m.dims, x_ref)
    U = np.array([0.3, -0.2, 0.5, 0.0])
    X = rollout(m, X0, U)
    S = sensitivity(m, X, U, X0)
    H = gn_hessian([cost], X, U, S)

    h = 1e-4
    fd = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            for si, sj, w in [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]:
                Up = U.copy()
                Up[i] += si * h
                Up[j] += sj * h
                fd[i, j] += w * cost.value(rollout(m, X0, Up), Up)
    fd /= 4 * h * h
    assert np.allclose(H, fd, atol=1e-6)
    assert np.allclose(H, H.T, atol=1e-12)


def test_solve_matches_normal_equations():
    # independent oracle: X = F U + c is linear, so the optimum solves
    # (2 F^T F + 2 rho I) U = 2 F^T (x_ref - c)
    m = ScalarLinear(a=0.9, b=0.8, N=5)
    x_ref = np.linspace(1.0, 0.2, 5)
    rho = 1e-3
    cost = TrackingQuadratic(m.dims, x_ref, rho=rho)

    F = np.zeros((5, 5))
    for j in range(5):
        e = np.zeros(5)
        e[j] = 1.0
        F[:, j] = rollout(m, X0, e) - rollout(m, X0, np.zeros(5))
    c = rollout(m, X0, np.zeros(5))
    U_expected = np.linalg.solve(F.T @ F + rho * np.eye(5), F.T @ (x_ref - c))

    opts = SolverOptions(levenberg_lambda=0.0, gradient_tolerance=1e-12)
    U_star, stats = solve(m, [cost], X0, np.zeros(5), opts)
    assert stats.converged
    assert stats.iterations <= 2
    assert stats.final_gradient_norm < 1e-10
    assert np.allclose(U_star, U_expected, atol=1e-9)


def test_solve_at_optimum_terminates_immediately():
    m = ScalarLinear(a=0.9, b=0.8, N=5)
    cost = TrackingQuadratic(m.dims, np.zeros(5), rho=1e-3)
    opts = SolverOptions(levenberg_lambda=0.0)
    U_star, _ = solve(m, [cost], X0, np.zeros(5), opts)
    _, stats = solve(m, [cost], X0, U_star, opts)
    assert stats.iterations <= 1
    assert stats.converged
    hist = stats.cost_history
    assert all(b <= a + 1e-15 for a, b in zip(hist, hist[1:]))


def test_solve_cost_history_monotone(robot):
    from conftest import make_problem
    from quadmpc.locomotion import initial_state

    x0 = initial_state("ipm", [0.03, -0.02, 0.3], [0.1, 0.2, 0.0], 0.04)
    prob = make_problem("ipm", robot, x0=x0)
    _, stats = solve(prob.model, prob.costs, prob.x0, prob.u_init)
    assert stats.converged
    assert stats.iterations <= 50
    hist = stats.cost_history
    assert all(b <= a + 1e-15 for a, b in zip(hist, hist[1:]))


def test_solve_fixed_indices_pins_entries():
    m = ScalarLinear(a=0.9, b=0.8, N=5)
    cost = TrackingQuadratic(m.dims, np.linspace(1, 0, 5), rho=1e-3)
    U0 = np.full(5, 0.123)
    U_star, _ = solve(m, [cost], X0, U0, fixed_indices=np.array([2]))
    assert U_star[2] == pytest.approx(0.123)
    assert not np.allclose(U_star[0], 0.123)


def test_dims_validation():
    with pytest.raises(ValueError):
        ProblemDims(n=0, m=1, p=0, N=1, dt=0.1)
    with pytest.raises(ValueError):
        ProblemDims(n=1, m=1, p=-1, N=1, dt=0.1)
    with pytest.raises(ValueError):
        ProblemDims(n=1, m=1, p=0, N=1, dt=0.0)
    dims = ProblemDims(n=2, m=3, p=4, N=5, dt=0.1)
    assert dims.nx == 10
    assert dims.nu == 19
    assert dims.x_slice(1) == slice(0, 2)
    assert dims.u_slice(4) == slice(12, 15)
    assert dims.p_slice == slice(15, 19)
    with pytest.raises(IndexError):
        dims.x_slice(0)
    with pytest.raises(IndexError):
        dims.u_slice(5)
