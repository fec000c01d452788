from .params import RobotParams, RobotConfig, ActuatorState
from .rod import RodShape, rod_shape, base_strain, arc_chord_length
from .actuation import apply_actuator_noise, scale_command
from .contact import ContactPoint, ContactReport, step_quasi_static
from .tracking import TrajectoryEntry, TrajectoryLog, track_waypoints

__all__ = [
    "RobotParams", "RobotConfig", "ActuatorState",
    "RodShape", "rod_shape", "base_strain", "arc_chord_length",
    "apply_actuator_noise", "scale_command",
    "ContactPoint", "ContactReport", "step_quasi_static",
    "TrajectoryEntry", "TrajectoryLog", "track_waypoints",
]
