"""Single rigid body driven by per-foot ground reaction forces.

State per step is x = [r_k, r_{k-1}, q_k, q_{k-1}] (14 entries): the Verlet
position pair plus the orientation pair. The body-frame angular velocity is
decoded from the quaternion pair, advanced with the torque dynamics, and
re-applied through the exponential map, which keeps the quaternion on the
unit sphere (an explicit renormalization guards against drift and is part
of the differentiated map).

Controls are u = [f_fl, f_fr, f_rl, f_rr] (12 entries; swing-leg slots are
inert, as for the pendulum model).
"""

from __future__ import annotations

import math

import numpy as np

from ..ocp import CostEval, CostTerm, DynamicsModel, ProblemDims, StepJacobians
from ..quat import (
    lmat,
    qconj,
    qmul,
    qnormalize,
    qnormalize_jac,
    quat_exp,
    quat_exp_jac,
    rmat,
    rotate_world_to_body,
    rotate_world_to_body_jac_q,
    rotate_world_to_body_mat,
)
from ..robot import RobotParams
from ..smooth import SmoothPlusParams, smooth_plus, smooth_plus_d1, smooth_plus_d2

__all__ = [
    "srbm_translational_accel",
    "srbm_angular_accel",
    "srbm_step",
    "srbm_initial_state",
    "SrbmModel",
    "SrbmModelCost",
]

N_LEGS = 4
_CONJ4 = np.diag([1.0, -1.0, -1.0, -1.0])
_EYE14 = np.eye(14)  # shared read-only E block for the explicit model

K_ORIENTATION = 1.0
K_GRF = 1.0


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def srbm_translational_accel(forces: np.ndarray, params: RobotParams) -> np.ndarray:
    """(1/m) sum f_i + g."""
    forces = np.asarray(forces, dtype=float).reshape(-1, 3)
    return forces.sum(axis=0) / params.mass + params.gravity


def srbm_angular_accel(
    r: np.ndarray,
    q: np.ndarray,
    omega_body: np.ndarray,
    forces: np.ndarray,
    footholds: np.ndarray,
    params: RobotParams,
) -> np.ndarray:
    """I^-1 [R(q)^T sum (s_i - r) x f_i - w x I w], all in body frame."""
    forces = np.asarray(forces, dtype=float).reshape(-1, 3)
    footholds = np.asarray(footholds, dtype=float).reshape(-1, 3)
    torque_world = np.zeros(3)
    for s_i, f_i in zip(footholds, forces):
        torque_world += np.cross(s_i - r, f_i)
    torque_body = rotate_world_to_body(q, torque_world)
    gyro = np.cross(omega_body, params.inertia_body @ omega_body)
    return np.linalg.solve(params.inertia_body, torque_body - gyro)


def decode_omega(q_prev: np.ndarray, q: np.ndarray, dt: float) -> np.ndarray:
    """Body angular velocity encoded by a quaternion pair."""
    return 2.0 * qmul(qconj(q_prev), q)[1:] / dt


def srbm_step(
    r: np.ndarray,
    r_prev: np.ndarray,
    q: np.ndarray,
    q_prev: np.ndarray,
    forces: np.ndarray,
    footholds: np.ndarray,
    dt: float,
    params: RobotParams,
) -> tuple[np.ndarray, np.ndarray]:
    """One Verlet + Lie-group Euler update; returns (r_{k+1}, q_{k+1})."""
    a_t = srbm_translational_accel(forces, params)
    r_new = 2.0 * r - r_prev + a_t * dt * dt

    omega = decode_omega(q_prev, q, dt)
    omega_dot = srbm_angular_accel(r, q, omega, forces, footholds, params)
    omega_next = omega + omega_dot * dt
    q_new = qnormalize(qmul(q, quat_exp(omega_next * dt)))
    return r_new, q_new


def srbm_initial_state(
    r0: np.ndarray,
    v0: np.ndarray,
    q0: np.ndarray,
    omega0_body: np.ndarray,
    dt: float,
) -> np.ndarray:
    """Encode measured pose/velocities as the position and quaternion pairs."""
    r0 = np.asarray(r0, dtype=float)
    q0 = qnormalize(np.asarray(q0, dtype=float))
    imag = 0.5 * np.asarray(omega0_body, dtype=float) * dt
    w = np.sqrt(max(0.0, 1.0 - imag @ imag))
    rel = qnormalize(np.concatenate([[w], imag]))  # conj(q_prev) * q0 == rel
    q_prev = qmul(q0, qconj(rel))
    return np.concatenate([r0, r0 - np.asarray(v0, dtype=float) * dt, q0, q_prev])


class SrbmModel(DynamicsModel):
    """Explicit rigid-body dynamics bound to a stance timetable."""

    def __init__(
        self,
        dims: ProblemDims,
        stance_feet: list[np.ndarray],
        stance_legs: list[np.ndarray],
        params: RobotParams,
    ):
        if dims.n != 14 or dims.m != 3 * N_LEGS:
            raise ValueError("rigid-body model requires n=14, m=12")
        self.dims = dims
        self.params = params
        self.stance_feet = [np.asarray(f, dtype=int) for f in stance_feet]
        self.stance_legs = [np.asarray(l, dtype=int) for l in stance_legs]
        self._p_cols = [
            (3 * f[:, None] + np.arange(3)).ravel() for f in self.stance_feet
        ]
        self._u_cols = [
            (3 * l[:, None] + np.arange(3)).ravel() for l in self.stance_legs
        ]
        self._inertia_inv = np.linalg.inv(params.inertia_body)
        self._ib = [[float(v) for v in row] for row in params.inertia_body]
        self._ii = [[float(v) for v in row] for row in self._inertia_inv]

    def _unpack(self, k, x, u, p):
        r = x[:3]
        r_prev = x[3:6]
        q = x[6:10]
        q_prev = x[10:14]
        forces = u[self._u_cols[k]].reshape(-1, 3)
        feet = p[self._p_cols[k]].reshape(-1, 3)
        return r, r_prev, q, q_prev, forces, feet

    def step(self, k, x, u, p):
        # fused srbm_step in scalar quaternion arithmetic; identical math to
        # the public pieces (the tests assert agreement) but ~10x faster,
        # which the finite-difference oracles rely on
        dt = self.dims.dt
        par = self.params
        r = x[:3]
        forces = u[self._u_cols[k]].reshape(-1, 3)
        feet = p[self._p_cols[k]].reshape(-1, 3)

        out = np.empty(14)
        a_t = forces.sum(axis=0) / par.mass + par.gravity
        out[:3] = 2.0 * r - x[3:6] + a_t * (dt * dt)
        out[3:6] = r

        qw, qx, qy, qz = float(x[6]), float(x[7]), float(x[8]), float(x[9])
        pw, px, py, pz = float(x[10]), -float(x[11]), -float(x[12]), -float(x[13])
        # omega_k = 2 Im(conj(q_prev) * q) / dt
        ox = (pw * qx + px * qw + py * qz - pz * qy) * 2.0 / dt
        oy = (pw * qy - px * qz + py * qw + pz * qx) * 2.0 / dt
        oz = (pw * qz + px * qy - py * qx + pz * qw) * 2.0 / dt

        d = feet - r
        mx = float(d[:, 1] @ forces[:, 2] - d[:, 2] @ forces[:, 1])
        my = float(d[:, 2] @ forces[:, 0] - d[:, 0] @ forces[:, 2])
        mz = float(d[:, 0] @ forces[:, 1] - d[:, 1] @ forces[:, 0])
        # torque to body frame via the sandwich Im(conj(q) * (0, m) * q)
        tw = qx * mx + qy * my + qz * mz
        tx = qw * mx - qy * mz + qz * my
        ty = qw * my - qz * mx + qx * mz
        tz = qw * mz - qx * my + qy * mx
        bx = tw * qx + tx * qw + ty * qz - tz * qy
        by = tw * qy - tx * qz + ty * qw + tz * qx
        bz = tw * qz + tx * qy - ty * qx + tz * qw

        ib = self._ib
        hx = ib[0][0] * ox + ib[0][1] * oy + ib[0][2] * oz
        hy = ib[1][0] * ox + ib[1][1] * oy + ib[1][2] * oz
        hz = ib[2][0] * ox + ib[2][1] * oy + ib[2][2] * oz
        ex_ = bx - (oy * hz - oz * hy)
        ey_ = by - (oz * hx - ox * hz)
        ez_ = bz - (ox * hy - oy * hx)
        ii = self._ii
        vx = (ox + (ii[0][0] * ex_ + ii[0][1] * ey_ + ii[0][2] * ez_) * dt) * dt
        vy = (oy + (ii[1][0] * ex_ + ii[1][1] * ey_ + ii[1][2] * ez_) * dt) * dt
        vz = (oz + (ii[2][0] * ex_ + ii[2][1] * ey_ + ii[2][2] * ez_) * dt) * dt

        theta = math.sqrt(vx * vx + vy * vy + vz * vz)
        if theta < 1e-8:
            s = 0.5 - theta * theta / 48.0
            ew = 1.0 - theta * theta / 8.0
        else:
            s = math.sin(0.5 * theta) / theta
            ew = math.cos(0.5 * theta)
        ex, ey, ez = s * vx, s * vy, s * vz

        nw = qw * ew - qx * ex - qy * ey - qz * ez
        nx = qw * ex + qx * ew + qy * ez - qz * ey
        ny = qw * ey - qx * ez + qy * ew + qz * ex
        nz = qw * ez + qx * ey - qy * ex + qz * ew
        inv_norm = 1.0 / math.sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
        out[6] = nw * inv_norm
        out[7] = nx * inv_norm
        out[8] = ny * inv_norm
        out[9] = nz * inv_norm
        out[10:14] = x[6:10]
        return out

    def step_jacobians(self, k, x, u, p):
        dims = self.dims
        dt = dims.dt
        dt2 = dt * dt
        par = self.params
        iinv = self._inertia_inv
        r, _, q, q_prev, forces, feet = self._unpack(k, x, u, p)

        # forward quantities
        omega = decode_omega(q_prev, q, dt)
        d = feet - r
        torque_world = np.array(
            [
                d[:, 1] @ forces[:, 2] - d[:, 2] @ forces[:, 1],
                d[:, 2] @ forces[:, 0] - d[:, 0] @ forces[:, 2],
                d[:, 0] @ forces[:, 1] - d[:, 1] @ forces[:, 0],
            ]
        )
        torque_body = rotate_world_to_body(q, torque_world)
        i_omega = par.inertia_body @ omega
        gyro = np.array(
            [
                omega[1] * i_omega[2] - omega[2] * i_omega[1],
                omega[2] * i_omega[0] - omega[0] * i_omega[2],
                omega[0] * i_omega[1] - omega[1] * i_omega[0],
            ]
        )
        omega_dot = iinv @ (torque_body - gyro)
        omega_next = omega + omega_dot * dt
        e = quat_exp(omega_next * dt)
        q_raw = qmul(q, e)

        d_norm = qnormalize_jac(q_raw)
        # chain through the exponential and the left product with q
        d_qnew_d_omega_next = d_norm @ lmat(q) @ (quat_exp_jac(omega_next * dt) * dt)

        w2b = rotate_world_to_body_mat(q)
        iinv_w2b = iinv @ w2b
        d_omega_d_q = (2.0 / dt) * lmat(qconj(q_prev))[1:]
        d_omega_d_qprev = (2.0 / dt) * (rmat(q) @ _CONJ4)[1:]
        d_omegadot_d_omega = -iinv @ (
            _skew(omega) @ par.inertia_body - _skew(i_omega)
        )
        d_omegadot_d_q = iinv @ rotate_world_to_body_jac_q(q, torque_world)
        sum_skew_f = _skew(forces.sum(axis=0))
        d_omegadot_d_r = iinv_w2b @ sum_skew_f

        d_onext_d_q = d_omega_d_q + dt * (
            d_omegadot_d_q + d_omegadot_d_omega @ d_omega_d_q
        )
        d_onext_d_qprev = d_omega_d_qprev + dt * d_omegadot_d_omega @ d_omega_d_qprev
        d_onext_d_r = dt * d_omegadot_d_r

        d_qnew_d_q = d_norm @ rmat(e) + d_qnew_d_omega_next @ d_onext_d_q
        d_qnew_d_qprev = d_qnew_d_omega_next @ d_onext_d_qprev
        d_qnew_d_r = d_qnew_d_omega_next @ d_onext_d_r

        A = np.zeros((14, 14))
        A[0, 0] = A[1, 1] = A[2, 2] = -2.0
        A[0, 3] = A[1, 4] = A[2, 5] = 1.0
        A[3, 0] = A[4, 1] = A[5, 2] = -1.0
        A[6:10, :3] = -d_qnew_d_r
        A[6:10, 6:10] = -d_qnew_d_q
        A[6:10, 10:14] = -d_qnew_d_qprev
        A[10, 6] = A[11, 7] = A[12, 8] = A[13, 9] = -1.0

        B = np.zeros((14, dims.m))
        P = np.zeros((14, dims.p))
        m_scale = -dt2 / par.mass
        d_qnew_d_onext_dt = d_qnew_d_omega_next * dt
        for f_i, s_i, leg, foot in zip(
            forces, feet, self.stance_legs[k], self.stance_feet[k]
        ):
            c0, p0 = 3 * leg, 3 * foot
            B[0, c0] += m_scale
            B[1, c0 + 1] += m_scale
            B[2, c0 + 2] += m_scale
            B[6:10, c0 : c0 + 3] -= d_qnew_d_onext_dt @ (iinv_w2b @ _skew(s_i - r))
            P[6:10, p0 : p0 + 3] += d_qnew_d_onext_dt @ (iinv_w2b @ _skew(f_i))

        return StepJacobians(A=A, E=_EYE14, B=B, P=P)


class SrbmModelCost(CostTerm):
    """Orientation tracking plus non-negative vertical GRF soft constraint.

    Orientation error 1 - |q . q_ref| is evaluated on the planned states
    x_1..x_N (the measured x_0 term would be constant); the double cover is
    absorbed by the absolute value. The GRF penalty covers the stance legs
    of every step.
    """

    def __init__(
        self,
        dims: ProblemDims,
        stance_legs: list[np.ndarray],
        q_ref: np.ndarray,
        k_orientation: float = K_ORIENTATION,
        k_grf: float = K_GRF,
        eps: float = 0.1,
    ):
        self.dims = dims
        self.sp = SmoothPlusParams(r=0.0, eps=eps)
        self.k_orientation = k_orientation
        self.k_grf = k_grf
        q_ref = np.asarray(q_ref, dtype=float)
        if q_ref.shape != (dims.N + 1, 4):
            raise ValueError("q_ref must hold N+1 unit quaternions")
        if np.max(np.abs(np.linalg.norm(q_ref, axis=1) - 1.0)) > 1e-9:
            raise ValueError("q_ref quaternions must be unit norm")
        self.q_ref = q_ref
        # f_z decision columns per step
        self._fz_cols = [
            k * dims.m + 3 * np.asarray(legs, dtype=int) + 2
            for k, legs in enumerate(stance_legs)
        ]
        self._fz_flat = (
            np.concatenate(self._fz_cols)
            if any(len(c) for c in self._fz_cols)
            else np.array([], dtype=int)
        )
        self._q_rows = (
            np.arange(dims.N)[:, None] * dims.n + 6 + np.arange(4)
        )  # (N, 4), row k-1 holds q_k
        # 1 - |q.q_ref| is piecewise linear in raw coordinates, so its exact
        # second derivative vanishes; supply the unit-sphere tangent curvature
        # (I - q_ref q_ref^T, sign-free under the double cover) instead so the
        # solver feels orientation stiffness
        self._hxx = np.zeros((dims.N, dims.n, dims.n))
        for k in range(dims.N):
            qr = self.q_ref[k + 1]
            self._hxx[k, 6:10, 6:10] = self.k_orientation * (
                np.eye(4) - np.outer(qr, qr)
            )

    def value(self, X, U):
        dots = np.einsum("ij,ij->i", X[self._q_rows], self.q_ref[1:])
        total = self.k_orientation * np.sum(1.0 - np.abs(dots))
        total += self.k_grf * np.sum(smooth_plus(U[self._fz_flat], self.sp))
        return float(total)

    def derivatives(self, X, U):
        dims = self.dims
        gx = np.zeros(dims.nx)
        gu = np.zeros(dims.nu)
        huu = np.zeros((dims.nu, dims.nu))
        dots = np.einsum("ij,ij->i", X[self._q_rows], self.q_ref[1:])
        total = self.k_orientation * np.sum(1.0 - np.abs(dots))
        gx[self._q_rows.ravel()] = (
            -self.k_orientation * np.sign(dots)[:, None] * self.q_ref[1:]
        ).ravel()
        fz = U[self._fz_flat]
        total += self.k_grf * np.sum(smooth_plus(fz, self.sp))
        gu[self._fz_flat] = self.k_grf * smooth_plus_d1(fz, self.sp)
        huu[self._fz_flat, self._fz_flat] = self.k_grf * smooth_plus_d2(fz, self.sp)
        return CostEval(value=float(total), gx=gx, gu=gu, hxx=self._hxx, huu=huu)
