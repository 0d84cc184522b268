"""Variable-height inverted pendulum: point mass on a massless rod at the CoP.

State per step is the Verlet position pair x = [r_k, r_{k-1}] (6 entries);
the encoded velocity is (r_k - r_{k-1}) / dt. Controls are
u = [hdd, w_fl, w_fr, w_rl, w_rr]: the commanded height acceleration plus
one CoP weight slot per leg. Only the stance legs' weights enter the
dynamics and the simplex cost at any given step; swing-leg slots are inert
so the control dimension stays constant over the horizon.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import SingularPendulumError
from ..ocp import CostEval, CostTerm, DynamicsModel, ProblemDims, StepJacobians
from ..robot import RobotParams
from ..smooth import SmoothPlusParams, smooth_plus, smooth_plus_d1, smooth_plus_d2

__all__ = [
    "cop",
    "ipm_accel",
    "ipm_step",
    "ipm_initial_state",
    "IpmModel",
    "IpmSimplexCost",
]

N_LEGS = 4
EZ = np.array([0.0, 0.0, 1.0])
_EYE6 = np.eye(6)  # shared read-only E block for the explicit model

# Table-ported objective weights for the simplex soft constraint
K_WEIGHT_SUM = 100.0
K_WEIGHT_POS = 1.0


def cop(weights: np.ndarray, footholds: np.ndarray) -> np.ndarray:
    """Convex combination of stance footholds; weights w_i, points s_i."""
    weights = np.asarray(weights, dtype=float)
    footholds = np.asarray(footholds, dtype=float).reshape(-1, 3)
    if weights.shape[0] != footholds.shape[0]:
        raise ValueError("weight and foothold counts differ")
    if weights.shape[0] == 0:
        raise ValueError("empty stance set")
    return weights @ footholds


def ipm_accel(
    r: np.ndarray,
    hdd: float,
    weights: np.ndarray,
    footholds: np.ndarray,
    gravity: np.ndarray,
) -> np.ndarray:
    """(r - cop) * (hdd + |g|) / r_z + g."""
    if r[2] <= 0.0:
        raise SingularPendulumError(f"pendulum height {r[2]:.4f} <= 0")
    g_norm = np.linalg.norm(gravity)
    return (r - cop(weights, footholds)) * ((hdd + g_norm) / r[2]) + gravity


def ipm_step(
    r: np.ndarray,
    r_prev: np.ndarray,
    hdd: float,
    weights: np.ndarray,
    footholds: np.ndarray,
    dt: float,
    gravity: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Verlet update; returns the new pair (r_{k+1}, r_k)."""
    a = ipm_accel(r, hdd, weights, footholds, gravity)
    return 2.0 * r - r_prev + a * dt * dt, r


def ipm_initial_state(r0: np.ndarray, v0: np.ndarray, dt: float) -> np.ndarray:
    """Encode a measured position/velocity as the Verlet pair."""
    r0 = np.asarray(r0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    return np.concatenate([r0, r0 - v0 * dt])


class IpmModel(DynamicsModel):
    """Explicit pendulum dynamics bound to a stance timetable.

    ``stance_feet[k]`` lists foothold indices active at step k and
    ``stance_legs[k]`` the leg owning each of them.
    """

    def __init__(
        self,
        dims: ProblemDims,
        stance_feet: list[np.ndarray],
        stance_legs: list[np.ndarray],
        params: RobotParams,
    ):
        if dims.n != 6 or dims.m != 1 + N_LEGS:
            raise ValueError("pendulum model requires n=6, m=5")
        self.dims = dims
        self.params = params
        self.stance_feet = [np.asarray(f, dtype=int) for f in stance_feet]
        self.stance_legs = [np.asarray(l, dtype=int) for l in stance_legs]
        if any(len(f) == 0 for f in self.stance_feet):
            raise ValueError("pendulum model needs a non-empty stance set at every step")
        # precomputed gather indices: foothold coordinate columns per step
        self._p_cols = [
            (3 * f[:, None] + np.arange(3)).ravel() for f in self.stance_feet
        ]
        self._g_norm = params.gravity_norm
        self._gravity = params.gravity

    def _unpack(self, k, x, u, p):
        r = x[:3]
        r_prev = x[3:6]
        hdd = u[0]
        w = u[1 + self.stance_legs[k]]
        feet = p[self._p_cols[k]].reshape(-1, 3)
        return r, r_prev, hdd, w, feet

    def step(self, k, x, u, p):
        # fused ipm_step; kept allocation-light for the finite-difference oracles
        r, r_prev, hdd, w, feet = self._unpack(k, x, u, p)
        rz = r[2]
        if rz <= 0.0:
            raise SingularPendulumError(f"pendulum height {rz:.4f} <= 0")
        scale = (hdd + self._g_norm) / rz
        a = (r - w @ feet) * scale + self._gravity
        out = np.empty(6)
        out[:3] = 2.0 * r - r_prev + a * (self.dims.dt * self.dims.dt)
        out[3:] = r
        return out

    def step_jacobians(self, k, x, u, p):
        dims = self.dims
        r, _, hdd, w, feet = self._unpack(k, x, u, p)
        if r[2] <= 0.0:
            raise SingularPendulumError(f"pendulum height {r[2]:.4f} <= 0")
        dt2 = dims.dt * dims.dt
        c = hdd + self._g_norm
        rz = r[2]
        lever = r - w @ feet

        da_dr = (c / rz) * np.eye(3) - np.outer(lever * (c / rz**2), EZ)
        da_dhdd = lever / rz

        A = np.zeros((6, 6))
        A[:3, :3] = -(2.0 * np.eye(3) + dt2 * da_dr)
        A[:3, 3:] = np.eye(3)
        A[3:, :3] = -np.eye(3)

        B = np.zeros((6, dims.m))
        B[:3, 0] = -dt2 * da_dhdd
        for leg, s_i in zip(self.stance_legs[k], feet):
            B[:3, 1 + leg] += dt2 * (c / rz) * s_i  # -dt2 * da/dw

        P = np.zeros((6, dims.p))
        for w_i, foot in zip(w, self.stance_feet[k]):
            scale = dt2 * w_i * c / rz
            P[0, 3 * foot] += scale
            P[1, 3 * foot + 1] += scale
            P[2, 3 * foot + 2] += scale

        return StepJacobians(A=A, E=_EYE6, B=B, P=P)


class IpmSimplexCost(CostTerm):
    """Soft simplex constraint on the stance weights of every step.

    Per step: (K4/2) (1 - sum w)^2 + K5 * sum smooth_plus(w). Convex, so the
    exact second derivatives double as the Gauss-Newton blocks.
    """

    def __init__(self, dims: ProblemDims, stance_legs: list[np.ndarray],
                 k_sum: float = K_WEIGHT_SUM, k_pos: float = K_WEIGHT_POS,
                 eps: float = 0.1):
        self.dims = dims
        self.sp = SmoothPlusParams(r=0.0, eps=eps)
        self.k_sum = k_sum
        self.k_pos = k_pos
        # decision-vector columns of the stance weights at each step
        self._w_cols = [
            k * dims.m + 1 + np.asarray(legs, dtype=int)
            for k, legs in enumerate(stance_legs)
        ]
        if any(len(c) == 0 for c in self._w_cols):
            raise ValueError("simplex cost needs a non-empty stance set per step")
        self._cols_flat = np.concatenate(self._w_cols)
        self._seg_starts = np.cumsum([0] + [len(c) for c in self._w_cols])[:-1]
        self._seg_id = np.concatenate(
            [np.full(len(c), k, dtype=int) for k, c in enumerate(self._w_cols)]
        )

    def value(self, X, U):
        w = U[self._cols_flat]
        defects = 1.0 - np.add.reduceat(w, self._seg_starts)
        return float(
            0.5 * self.k_sum * np.sum(defects * defects)
            + self.k_pos * np.sum(smooth_plus(w, self.sp))
        )

    def derivatives(self, X, U):
        dims = self.dims
        w = U[self._cols_flat]
        defects = 1.0 - np.add.reduceat(w, self._seg_starts)
        total = float(
            0.5 * self.k_sum * np.sum(defects * defects)
            + self.k_pos * np.sum(smooth_plus(w, self.sp))
        )
        gu = np.zeros(dims.nu)
        gu[self._cols_flat] = (
            -self.k_sum * defects[self._seg_id]
            + self.k_pos * smooth_plus_d1(w, self.sp)
        )
        huu = np.zeros((dims.nu, dims.nu))
        for cols in self._w_cols:
            huu[np.ix_(cols, cols)] += self.k_sum
        huu[self._cols_flat, self._cols_flat] += self.k_pos * smooth_plus_d2(
            w, self.sp
        )
        return CostEval(value=total, gu=gu, huu=huu)
