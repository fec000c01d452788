"""Actuator imperfections: arrival delays and magnitude-dependent scaling."""

import numpy as np

from .params import ActuatorState, RobotConfig, RobotParams

TWO_PI = 2.0 * np.pi
SCALE = 0.05


def scale_command(cmd: RobotConfig, params: RobotParams) -> RobotConfig:
    """Tendon-stretch style scaling; q3 passes through; q1 clamped after."""
    q1 = cmd.q1 * (1.0 + SCALE * abs(cmd.q1) / params.q1_max)
    q2 = cmd.q2 * (1.0 + SCALE * abs(cmd.q2) / TWO_PI)
    return RobotConfig(q1, q2, cmd.q3).clamped(params)


def apply_actuator_noise(cmd: RobotConfig, state: ActuatorState, now: float,
                         params: RobotParams,
                         sample_at: float | None = None) -> RobotConfig:
    """Queue cmd at `now` and return the effective configuration.

    The command takes effect at issue + delay with delay ~ U(0, 0.1) s;
    whichever command is active at `sample_at` (default: `now`) is then
    magnitude-scaled and clamped. With state.enabled = False both delay
    and scaling are bypassed.
    """
    state.issue(cmd, now)
    active = state.active_command(now if sample_at is None else sample_at)
    if not state.enabled:
        return active.clamped(params)
    return scale_command(active, params)
