"""Smooth one-sided penalty used by all soft inequality terms.

``smooth_plus`` penalizes values below a threshold ``r``. It is zero for
x >= r + eps, quadratic for x <= r - eps, and blends with a cubic in
between so that value, slope and curvature are continuous everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SmoothPlusParams",
    "smooth_plus",
    "smooth_plus_d1",
    "smooth_plus_d2",
    "smooth_abs",
    "smooth_abs_d1",
]


@dataclass(frozen=True)
class SmoothPlusParams:
    r: float = 0.0
    eps: float = 0.1

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")


def smooth_plus(x, params: SmoothPlusParams):
    """Penalty value; supports scalars and arrays."""
    g = np.asarray(x, dtype=float) - params.r
    e = params.eps
    quad = g * g + e * e / 3.0
    cubic = -(g**3) / (6.0 * e) + 0.5 * g * g - 0.5 * e * g + e * e / 6.0
    out = np.where(g >= e, 0.0, np.where(g < -e, quad, cubic))
    return out if out.ndim else float(out)


def smooth_plus_d1(x, params: SmoothPlusParams):
    """First derivative d/dx."""
    g = np.asarray(x, dtype=float) - params.r
    e = params.eps
    quad = 2.0 * g
    cubic = -g * g / (2.0 * e) + g - 0.5 * e
    out = np.where(g >= e, 0.0, np.where(g < -e, quad, cubic))
    return out if out.ndim else float(out)


def smooth_plus_d2(x, params: SmoothPlusParams):
    """Second derivative d2/dx2 (piecewise linear, continuous)."""
    g = np.asarray(x, dtype=float) - params.r
    e = params.eps
    out = np.where(g >= e, 0.0, np.where(g < -e, 2.0, 1.0 - g / e))
    return out if out.ndim else float(out)


def smooth_abs(x, delta: float = 1e-6):
    """C-infinity stand-in for |x|: sqrt(x^2 + delta^2)."""
    return np.sqrt(np.asarray(x, dtype=float) ** 2 + delta * delta)


def smooth_abs_d1(x, delta: float = 1e-6):
    x = np.asarray(x, dtype=float)
    return x / np.sqrt(x * x + delta * delta)
