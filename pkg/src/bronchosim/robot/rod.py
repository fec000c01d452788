"""Constant-strain rod kinematics for the bending segment.

State (r, R) evolves along arclength as dr/ds = R e3, dR/ds = R u_hat with
constant strain u; integration is classic RK4 on the flattened rotation
with Gram-Schmidt re-orthonormalization each step.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .params import RobotConfig, RobotParams


@dataclass
class RodShape:
    s: np.ndarray           # (N,) arclength samples
    positions: np.ndarray   # (N,3)
    rotations: np.ndarray   # (N,3,3)
    strain: np.ndarray      # (3,) rad/m, constant along s

    @property
    def tip_position(self) -> np.ndarray:
        return self.positions[-1]

    @property
    def tip_rotation(self) -> np.ndarray:
        return self.rotations[-1]


def base_strain(q: RobotConfig, params: RobotParams) -> np.ndarray:
    """Tendon displacement to bending strain about the local x axis."""
    extra = q.q1 * 1e-3 if params.eq3_literal else q.q1
    ux = -q.q1 / ((params.segment_length + extra) * params.gamma)
    return np.array([ux, 0.0, 0.0])


@njit(cache=True)
def _integrate(r0, rot0, u, length, ds, out_r, out_rot):
    n = out_r.shape[0] - 1
    rx, ry, rz = r0[0], r0[1], r0[2]
    R = rot0.copy()
    out_r[0, 0] = rx
    out_r[0, 1] = ry
    out_r[0, 2] = rz
    out_rot[0] = R
    ux, uy, uz = u[0], u[1], u[2]

    for k in range(n):
        h = ds if (k + 1) * ds <= length + 1e-15 else length - k * ds

        # RK4 on (r, R); derivatives: r' = R e3 (third column), R' = R u_hat
        # u_hat = [[0,-uz,uy],[uz,0,-ux],[-uy,ux,0]]
        R1 = R
        k1r = (R1[0, 2], R1[1, 2], R1[2, 2])
        k1R = _mul_hat(R1, ux, uy, uz)

        R2 = R + 0.5 * h * k1R
        k2r = (R2[0, 2], R2[1, 2], R2[2, 2])
        k2R = _mul_hat(R2, ux, uy, uz)

        R3 = R + 0.5 * h * k2R
        k3r = (R3[0, 2], R3[1, 2], R3[2, 2])
        k3R = _mul_hat(R3, ux, uy, uz)

        R4 = R + h * k3R
        k4r = (R4[0, 2], R4[1, 2], R4[2, 2])
        k4R = _mul_hat(R4, ux, uy, uz)

        rx += h / 6.0 * (k1r[0] + 2 * k2r[0] + 2 * k3r[0] + k4r[0])
        ry += h / 6.0 * (k1r[1] + 2 * k2r[1] + 2 * k3r[1] + k4r[1])
        rz += h / 6.0 * (k1r[2] + 2 * k2r[2] + 2 * k3r[2] + k4r[2])
        R = R + (h / 6.0) * (k1R + 2.0 * k2R + 2.0 * k3R + k4R)
        R = _orthonormalize(R)

        out_r[k + 1, 0] = rx
        out_r[k + 1, 1] = ry
        out_r[k + 1, 2] = rz
        out_rot[k + 1] = R


@njit(cache=True, inline="always")
def _mul_hat(R, ux, uy, uz):
    out = np.empty((3, 3))
    for i in range(3):
        a, b, c = R[i, 0], R[i, 1], R[i, 2]
        out[i, 0] = b * uz - c * uy
        out[i, 1] = c * ux - a * uz
        out[i, 2] = a * uy - b * ux
    return out


@njit(cache=True, inline="always")
def _orthonormalize(R):
    out = np.empty((3, 3))
    n0 = np.sqrt(R[0, 0] ** 2 + R[1, 0] ** 2 + R[2, 0] ** 2)
    for i in range(3):
        out[i, 0] = R[i, 0] / n0
    d = out[0, 0] * R[0, 1] + out[1, 0] * R[1, 1] + out[2, 0] * R[2, 1]
    c1x = R[0, 1] - d * out[0, 0]
    c1y = R[1, 1] - d * out[1, 0]
    c1z = R[2, 1] - d * out[2, 0]
    n1 = np.sqrt(c1x * c1x + c1y * c1y + c1z * c1z)
    out[0, 1] = c1x / n1
    out[1, 1] = c1y / n1
    out[2, 1] = c1z / n1
    out[0, 2] = out[1, 0] * out[2, 1] - out[2, 0] * out[1, 1]
    out[1, 2] = out[2, 0] * out[0, 1] - out[0, 0] * out[2, 1]
    out[2, 2] = out[0, 0] * out[1, 1] - out[1, 0] * out[0, 1]
    return out


def rod_shape(q: RobotConfig, params: RobotParams) -> RodShape:
    """Integrate the segment shape for a configuration within limits."""
    q.validate(params)
    u = base_strain(q, params)
    length = params.segment_length
    n = int(np.ceil(length / params.ds - 1e-12))
    s = np.minimum(np.arange(n + 1) * params.ds, length)

    r0 = np.array([0.0, 0.0, q.q3])
    c, sn = np.cos(q.q2), np.sin(q.q2)
    rot0 = np.array([[c, -sn, 0.0], [sn, c, 0.0], [0.0, 0.0, 1.0]])

    out_r = np.empty((n + 1, 3))
    out_rot = np.empty((n + 1, 3, 3))
    _integrate(r0, rot0, u, length, params.ds, out_r, out_rot)
    return RodShape(s=s, positions=out_r, rotations=out_rot, strain=u)


def arc_chord_length(kappa: float, length: float) -> float:
    """Closed-form chord of a circular arc: 2/|k| * sin(|k| l / 2)."""
    k = abs(kappa)
    if k < 1e-12:
        return length
    return 2.0 / k * np.sin(k * length / 2.0)
