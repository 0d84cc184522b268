"""Trajectory sensitivities vs. brute-force finite differences.

Builds a random trotting instance, computes dX/dU with the block forward
recursion, and compares every entry against central differences of the
rollout. The two must agree to ~1e-6 relative; this is the cheapest way to
convince yourself the analytic model Jacobians are right.
"""

import numpy as np

from quadmpc.ocp import sensitivity
from quadmpc.verify import fd_rollout_jacobian, random_problem, rel_error

rng = np.random.default_rng(42)

for kind in ("ipm", "srbm"):
    problem, U, X = random_problem(kind, rng)
    S = sensitivity(problem.model, X, U, problem.x0)
    fd = fd_rollout_jacobian(problem.model, problem.x0, U)
    err = rel_error(S.full, fd)
    print(f"{kind:5s}  dX/dU shape {S.full.shape}  max rel err vs FD: {err:.3e}")
