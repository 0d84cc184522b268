"""Unit-quaternion helpers, (w, x, y, z) ordering.

Rotation convention: a body orientation q maps body vectors to world via
q * (0, v) * conj(q). Derivatives treat quaternions as raw 4-vectors; the
multiplication matrices ``lmat``/``rmat`` make the chain rule mechanical.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "qmul",
    "qconj",
    "qnormalize",
    "qnormalize_jac",
    "quat_exp",
    "quat_exp_jac",
    "lmat",
    "rmat",
    "rotate_world_to_body",
    "rotate_world_to_body_jac_q",
    "rotate_world_to_body_mat",
    "rotate_body_to_world",
    "yaw_quat",
    "quat_yaw",
    "quat_to_rotmat",
]

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])
_CONJ = np.diag([1.0, -1.0, -1.0, -1.0])

# below this angle the closed form hits 0/0; a second-order series takes over
SMALL_ANGLE = 1e-8


def qmul(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def qconj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def qnormalize(q: np.ndarray) -> np.ndarray:
    return q / np.linalg.norm(q)


def qnormalize_jac(q: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(q)
    u = q / n
    return (np.eye(4) - np.outer(u, u)) / n


def lmat(q: np.ndarray) -> np.ndarray:
    """4x4 matrix with lmat(q) @ p == qmul(q, p)."""
    w, x, y, z = q
    return np.array(
        [
            [w, -x, -y, -z],
            [x, w, -z, y],
            [y, z, w, -x],
            [z, -y, x, w],
        ]
    )


def rmat(q: np.ndarray) -> np.ndarray:
    """4x4 matrix with rmat(q) @ p == qmul(p, q)."""
    w, x, y, z = q
    return np.array(
        [
            [w, -x, -y, -z],
            [x, w, z, -y],
            [y, -z, w, x],
            [z, y, -x, w],
        ]
    )


def quat_exp(v: np.ndarray) -> np.ndarray:
    """Exponential map R^3 -> S^3: rotation by angle ||v|| about v."""
    theta = np.linalg.norm(v)
    if theta < SMALL_ANGLE:
        s = 0.5 - theta * theta / 48.0
        w = 1.0 - theta * theta / 8.0
    else:
        s = np.sin(0.5 * theta) / theta
        w = np.cos(0.5 * theta)
    return np.array([w, s * v[0], s * v[1], s * v[2]])


def quat_exp_jac(v: np.ndarray) -> np.ndarray:
    """4x3 derivative of quat_exp w.r.t. v."""
    theta = np.linalg.norm(v)
    if theta < SMALL_ANGLE:
        s = 0.5 - theta * theta / 48.0
        sp_over_theta = -1.0 / 24.0
    else:
        s = np.sin(0.5 * theta) / theta
        sp = (0.5 * theta * np.cos(0.5 * theta) - np.sin(0.5 * theta)) / theta**2
        sp_over_theta = sp / theta
    jac = np.empty((4, 3))
    jac[0] = -0.5 * s * v
    jac[1:] = s * np.eye(3) + sp_over_theta * np.outer(v, v)
    return jac


def rotate_world_to_body(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Im(conj(q) * (0, v) * q); equals R(q)^T v for unit q."""
    p = np.array([0.0, v[0], v[1], v[2]])
    return qmul(qmul(qconj(q), p), q)[1:]


def rotate_world_to_body_jac_q(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """3x4 derivative of rotate_world_to_body w.r.t. raw q, v fixed."""
    p = np.array([0.0, v[0], v[1], v[2]])
    t = qmul(qconj(q), p)
    full = lmat(t) + rmat(q) @ rmat(p) @ _CONJ
    return full[1:]


def rotate_world_to_body_mat(q: np.ndarray) -> np.ndarray:
    """3x3 matrix M with M @ v == rotate_world_to_body(q, v)."""
    m = rmat(q) @ lmat(qconj(q))
    return m[1:, 1:]


def rotate_body_to_world(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    p = np.array([0.0, v[0], v[1], v[2]])
    return qmul(qmul(q, p), qconj(q))[1:]


def yaw_quat(yaw: float) -> np.ndarray:
    return np.array([np.cos(0.5 * yaw), 0.0, 0.0, np.sin(0.5 * yaw)])


def quat_yaw(q: np.ndarray) -> float:
    w, x, y, z = q
    return float(np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z)))


def quat_to_rotmat(q: np.ndarray) -> np.ndarray:
    """Body-to-world rotation matrix of a unit quaternion."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
