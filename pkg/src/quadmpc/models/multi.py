"""Two-robot coupling: one OCP whose state stacks both robots.

Per step, states and controls are concatenated [robot_a, robot_b]; the
parameter block keeps robot a's footholds first. Sub-model dynamics stay
independent; coupling happens only through shared cost terms (collision
avoidance). ``EmbeddedCost`` lifts a single-robot cost term into the
stacked coordinates.
"""

from __future__ import annotations

import numpy as np

from ..ocp import CostEval, CostTerm, DynamicsModel, ProblemDims, StepJacobians

__all__ = ["MultiRobotModel", "EmbeddedCost"]


class MultiRobotModel(DynamicsModel):
    def __init__(self, model_a: DynamicsModel, model_b: DynamicsModel):
        da, db = model_a.dims, model_b.dims
        if (da.N, da.dt) != (db.N, db.dt):
            raise ValueError("sub-models must share horizon and step length")
        self.sub = (model_a, model_b)
        self.dims = ProblemDims(
            n=da.n + db.n, m=da.m + db.m, p=da.p + db.p, N=da.N, dt=da.dt
        )

    def _split(self, x, u, p):
        da, db = self.sub[0].dims, self.sub[1].dims
        return (
            (x[: da.n], u[: da.m], p[: da.p]),
            (x[da.n :], u[da.m :], p[da.p :]),
        )

    def step(self, k, x, u, p):
        (xa, ua, pa), (xb, ub, pb) = self._split(x, u, p)
        return np.concatenate(
            [self.sub[0].step(k, xa, ua, pa), self.sub[1].step(k, xb, ub, pb)]
        )

    def step_jacobians(self, k, x, u, p):
        da, db = self.sub[0].dims, self.sub[1].dims
        (xa, ua, pa), (xb, ub, pb) = self._split(x, u, p)
        ja = self.sub[0].step_jacobians(k, xa, ua, pa)
        jb = self.sub[1].step_jacobians(k, xb, ub, pb)
        n, m, p_dim = self.dims.n, self.dims.m, self.dims.p
        A = np.zeros((n, n))
        E = np.zeros((n, n))
        B = np.zeros((n, m))
        P = np.zeros((n, p_dim))
        A[: da.n, : da.n] = ja.A
        A[da.n :, da.n :] = jb.A
        E[: da.n, : da.n] = ja.E
        E[da.n :, da.n :] = jb.E
        B[: da.n, : da.m] = ja.B
        B[da.n :, da.m :] = jb.B
        P[: da.n, : da.p] = ja.P
        P[da.n :, da.p :] = jb.P
        return StepJacobians(A=A, E=E, B=B, P=P)

    def state_index_map(self, robot: int) -> np.ndarray:
        """Stacked-X rows holding the given robot's states, in its own order."""
        da, db = self.sub[0].dims, self.sub[1].dims
        offset = 0 if robot == 0 else da.n
        n_r = da.n if robot == 0 else db.n
        return np.concatenate(
            [k * self.dims.n + offset + np.arange(n_r) for k in range(self.dims.N)]
        )

    def decision_index_map(self, robot: int) -> np.ndarray:
        """Stacked-U rows for the robot's controls then parameters."""
        da, db = self.sub[0].dims, self.sub[1].dims
        m_off = 0 if robot == 0 else da.m
        m_r = da.m if robot == 0 else db.m
        cols = [k * self.dims.m + m_off + np.arange(m_r) for k in range(self.dims.N)]
        p_off = self.dims.N * self.dims.m + (0 if robot == 0 else da.p)
        p_r = da.p if robot == 0 else db.p
        cols.append(p_off + np.arange(p_r))
        return np.concatenate(cols)


class EmbeddedCost(CostTerm):
    """Adapts a cost defined on one robot's (X, U) to the stacked layout."""

    def __init__(self, inner: CostTerm, stacked_dims: ProblemDims,
                 x_rows: np.ndarray, u_rows: np.ndarray, state_offset: int,
                 inner_n: int):
        self.inner = inner
        self.dims = stacked_dims
        self.x_rows = np.asarray(x_rows, dtype=int)
        self.u_rows = np.asarray(u_rows, dtype=int)
        self.state_offset = state_offset
        self.inner_n = inner_n

    def value(self, X, U):
        return self.inner.value(X[self.x_rows], U[self.u_rows])

    def derivatives(self, X, U):
        ev = self.inner.derivatives(X[self.x_rows], U[self.u_rows])
        out = CostEval(value=ev.value)
        if ev.gx is not None:
            out.gx = np.zeros(self.dims.nx)
            out.gx[self.x_rows] = ev.gx
        if ev.gu is not None:
            out.gu = np.zeros(self.dims.nu)
            out.gu[self.u_rows] = ev.gu
        if ev.hxx is not None:
            o = self.state_offset
            n_i = self.inner_n
            out.hxx = np.zeros((self.dims.N, self.dims.n, self.dims.n))
            if ev.hxx.ndim == 3:
                out.hxx[:, o : o + n_i, o : o + n_i] = ev.hxx
            else:
                for k in range(self.dims.N):
                    sl = slice(k * n_i, (k + 1) * n_i)
                    out.hxx[k, o : o + n_i, o : o + n_i] = ev.hxx[sl, sl]
        if ev.hxu is not None:
            out.hxu = np.zeros((self.dims.nx, self.dims.nu))
            out.hxu[np.ix_(self.x_rows, self.u_rows)] = ev.hxu
        if ev.huu is not None:
            out.huu = np.zeros((self.dims.nu, self.dims.nu))
            out.huu[np.ix_(self.u_rows, self.u_rows)] = ev.huu
        return out
