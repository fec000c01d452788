"""Bronchoscope parameters and actuation state."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RobotParams:
    """Physical constants of the single-bend, tendon-driven scope.

    Clinical scopes run 2.4--6.2 mm outer diameter, so tip_radius should
    stay within [1.2e-3, 3.1e-3] when emulating one.
    """

    segment_length: float = 0.050          # flexible segment length l (m)
    gamma: float = 1.75e-3                 # cross-section constant (m)
    q1_max: float = 0.008                  # tendon displacement limit (m)
    mu_static: float = 0.3
    mu_dynamic: float = 0.25
    tip_radius: float = 2.1e-3             # m
    contact_stiffness: float = 200.0       # N/m
    contact_damping: float = 2.0           # N*s/m
    ds: float = 0.5e-3                     # integration step (m)
    eq3_literal: bool = True               # keep the q1*1e-3 term in the strain map

    def __post_init__(self):
        if min(self.segment_length, self.gamma, self.q1_max, self.tip_radius,
               self.contact_stiffness, self.ds) <= 0:
            raise ValueError("robot parameters must be positive")
        if self.mu_dynamic > self.mu_static:
            raise ValueError("dynamic friction must not exceed static friction")

    def to_dict(self) -> dict:
        return {
            "segment_length": self.segment_length,
            "gamma": self.gamma,
            "q1_max": self.q1_max,
            "mu_static": self.mu_static,
            "mu_dynamic": self.mu_dynamic,
            "tip_radius": self.tip_radius,
            "contact_stiffness": self.contact_stiffness,
            "contact_damping": self.contact_damping,
            "ds": self.ds,
            "eq3_literal": self.eq3_literal,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RobotParams":
        return cls(**{k: d[k] for k in cls().to_dict() if k in d})


@dataclass
class RobotConfig:
    """Actuation coordinates: tendon pull q1 (m), roll q2 (rad), insertion q3 (m)."""

    q1: float = 0.0
    q2: float = 0.0
    q3: float = 0.0

    def validate(self, params: RobotParams) -> "RobotConfig":
        if abs(self.q1) > params.q1_max + 1e-12:
            raise ValueError(f"q1 = {self.q1} outside [{-params.q1_max}, {params.q1_max}]")
        return self

    def clamped(self, params: RobotParams) -> "RobotConfig":
        return RobotConfig(float(np.clip(self.q1, -params.q1_max, params.q1_max)),
                           self.q2, self.q3)

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.q2, self.q3])

    @classmethod
    def from_array(cls, a) -> "RobotConfig":
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass
class ActuatorState:
    """FIFO queue of pending commands with uniform random arrival delays."""

    seed: int = 0
    max_delay: float = 0.1      # s, delays ~ U(0, max_delay)
    enabled: bool = True
    queue: list = field(default_factory=list)  # (config, issue_t, delay)
    _tick: int = 0
    _active: RobotConfig = field(default_factory=RobotConfig)

    def issue(self, cmd: RobotConfig, now: float) -> None:
        if self.enabled:
            rng = np.random.Generator(np.random.Philox(
                key=self.seed, counter=[0, 0, 0, self._tick]))
            delay = float(rng.uniform(0.0, self.max_delay))
        else:
            delay = 0.0
        self._tick += 1
        self.queue.append((cmd, now, delay))

    def active_command(self, now: float) -> RobotConfig:
        """Latest command whose issue + delay has elapsed (FIFO order kept)."""
        while self.queue and self.queue[0][1] + self.queue[0][2] <= now:
            self._active = self.queue.pop(0)[0]
        return self._active
