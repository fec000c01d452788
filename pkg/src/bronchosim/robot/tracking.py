"""Damped-least-squares waypoint tracking with noise and contact in the loop."""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..skeleton.waypoints import TICK, WaypointSequence
from .actuation import apply_actuator_noise
from .contact import step_quasi_static
from .params import ActuatorState, RobotConfig, RobotParams
from .rod import rod_shape

log = logging.getLogger(__name__)

ORIENTATION_WEIGHT = 0.01   # m per rad
DLS_LAMBDA = 1e-4
INNER_ITERS = 15
POS_TOL = 1e-5              # m
STALL_TICKS = 20


@dataclass
class TrajectoryEntry:
    frame_id: int
    t_sec: float
    q_cmd: RobotConfig
    q_eff: RobotConfig
    position: np.ndarray
    rotation: np.ndarray
    contacts: list
    position_error: float


@dataclass
class TrajectoryLog:
    entries: list = field(default_factory=list)
    aborted: bool = False
    abort_reason: str = ""

    def __len__(self):
        return len(self.entries)

    def positions(self) -> np.ndarray:
        return np.array([e.position for e in self.entries])


def _rotvec(R: np.ndarray) -> np.ndarray:
    cos_a = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(cos_a)
    if angle < 1e-12:
        return np.zeros(3)
    axis = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    n = np.linalg.norm(axis)
    if n < 1e-12:
        # angle ~ pi: extract axis from R + I
        M = R + np.eye(3)
        axis = M[:, np.argmax(np.linalg.norm(M, axis=0))]
        axis /= np.linalg.norm(axis)
        return axis * angle
    return axis / n * angle


def _pose_error(q: np.ndarray, target_p, target_R, params) -> np.ndarray:
    shape = rod_shape(RobotConfig.from_array(q).clamped(params), params)
    e = np.empty(6)
    e[:3] = target_p - shape.tip_position
    e[3:] = ORIENTATION_WEIGHT * _rotvec(shape.tip_rotation.T @ target_R)
    return e


def _ik_step(q: np.ndarray, target_p, target_R, params) -> np.ndarray:
    """One damped-least-squares update on (q1, q2, q3)."""
    e = _pose_error(q, target_p, target_R, params)
    # forward-difference Jacobian of the tip pose: J = d(pose)/dq = -d(e)/dq
    J = np.empty((6, 3))
    steps = (1e-6, 1e-5, 1e-6)
    for j in range(3):
        dq = np.zeros(3)
        dq[j] = steps[j]
        J[:, j] = (e - _pose_error(q + dq, target_p, target_R, params)) / steps[j]
    A = J @ J.T + DLS_LAMBDA ** 2 * np.eye(6)
    dq = J.T @ np.linalg.solve(A, e)
    q_new = q + dq
    q_new[0] = np.clip(q_new[0], -params.q1_max, params.q1_max)
    return q_new


def track_waypoints(seq: WaypointSequence, sdf, params: RobotParams,
                    seed: int = 0, noise: bool = True) -> TrajectoryLog:
    """Track each waypoint at 10 Hz; log commanded/effective/achieved states."""
    if len(seq) == 0:
        raise ValueError("waypoint sequence is empty")
    actuator = ActuatorState(seed=seed, enabled=noise)
    logbook = TrajectoryLog()
    q = np.zeros(3)
    prev_tip = None
    best_err = np.inf
    stall = 0

    for k in range(len(seq)):
        t = k * TICK
        target_p = seq.positions[k]
        target_R = seq.rotations[k]

        for _ in range(INNER_ITERS):
            q = _ik_step(q, target_p, target_R, params)
            if np.linalg.norm(_pose_error(q, target_p, target_R, params)[:3]) < POS_TOL:
                break

        q_cmd = RobotConfig.from_array(q).clamped(params)
        # the frame is exposed mid-tick, so a delayed command may or may
        # not have landed yet depending on the drawn delay
        q_eff = apply_actuator_noise(q_cmd, actuator, t, params,
                                     sample_at=t + 0.5 * TICK)
        shape = rod_shape(q_eff, params)

        velocity = np.zeros(3) if prev_tip is None \
            else (shape.tip_position - prev_tip) / TICK
        if sdf is not None:
            shape, report = step_quasi_static(shape, sdf, params, velocity, TICK)
            contacts = report.contacts
        else:
            contacts = []
        prev_tip = shape.tip_position

        err = float(np.linalg.norm(target_p - shape.tip_position))
        logbook.entries.append(TrajectoryEntry(
            frame_id=k, t_sec=t, q_cmd=q_cmd, q_eff=q_eff,
            position=shape.tip_position.copy(),
            rotation=shape.tip_rotation.copy(),
            contacts=contacts, position_error=err))

        if err < best_err - 1e-9:
            best_err = err
            stall = 0
        else:
            stall += 1
            if stall >= STALL_TICKS:
                logbook.aborted = True
                logbook.abort_reason = (f"IK stalled for {STALL_TICKS} ticks at "
                                        f"frame {k}, error {err:.2e} m")
                log.error("%s", logbook.abort_reason)
                break
    return logbook
