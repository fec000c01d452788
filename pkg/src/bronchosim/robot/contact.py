"""Quasi-static soft contact between rod samples and the airway wall.

Penalty model: penetration delta = phi + tip_radius > 0 produces a normal
force k*delta - c*v_n pointing back into the lumen; the tangential demand
(spring force to drag the contact along the wall this tick) is capped by
the Coulomb cone with stick/slip switching.
"""

from dataclasses import dataclass, field

import numpy as np

from ..geometry import kernels
from ..geometry.sdf import SdfGrid
from .params import RobotParams
from .rod import RodShape

MAX_ITERATIONS = 50
STICK_VELOCITY = 1e-4   # m/s, below this tangential speed contacts stick
PENETRATION_TOL = 1e-6  # m


@dataclass
class ContactPoint:
    sample: int
    penetration: float
    normal: np.ndarray          # unit, pointing into the lumen
    normal_force: float
    tangential_force: float
    mode: str                   # "stick" | "slip"
    slip_displacement: np.ndarray


@dataclass
class ContactReport:
    contacts: list = field(default_factory=list)
    resolved: bool = True
    iterations: int = 0

    def __len__(self):
        return len(self.contacts)


def step_quasi_static(shape: RodShape, sdf: SdfGrid, params: RobotParams,
                      velocity=np.zeros(3), dt: float = 0.1):
    """Project penetrating samples out of the wall; report forces and modes."""
    velocity = np.asarray(velocity, dtype=float)
    pos = shape.positions.copy()
    vals, org, spc = sdf.values, sdf._origin_arr, sdf._spacing_arr
    # outside the grid the clamped field is constant (zero gradient), so
    # samples are first pulled back to the covered domain
    lo, hi = sdf.bounds()
    lo = lo + spc
    hi = hi - spc

    def phi(p):
        return kernels.grid_sample(vals, org, spc, p[0], p[1], p[2])

    def grad(p):
        return np.array(kernels.grid_gradient(vals, org, spc, p[0], p[1], p[2]))

    report = ContactReport()
    touched = False
    for i in range(len(pos)):
        escaped = np.clip(pos[i], lo, hi)
        if not np.array_equal(escaped, pos[i]):
            pos[i] = escaped
            touched = True
        delta = phi(pos[i]) + params.tip_radius
        if delta <= 0.0:
            continue
        touched = True
        g = grad(pos[i])
        gn = np.linalg.norm(g)
        n_out = g / gn if gn > 1e-12 else np.array([0.0, 0.0, 1.0])
        c_in = -n_out  # restoring direction, into the lumen

        v_n = float(velocity @ c_in)  # separation velocity
        f_n = params.contact_stiffness * delta - params.contact_damping * v_n
        f_n = max(f_n, 0.0)

        v_t = velocity - (velocity @ n_out) * n_out
        vt_norm = float(np.linalg.norm(v_t))
        demand = params.contact_stiffness * vt_norm * dt
        if vt_norm <= STICK_VELOCITY or demand <= params.mu_static * f_n:
            mode = "stick"
            f_t = demand
            slip = np.zeros(3)
        else:
            mode = "slip"
            f_t = params.mu_dynamic * f_n
            t_hat = v_t / vt_norm
            slip = -(f_t / params.contact_stiffness) * t_hat

        # displacement along the net force direction, scaled by compliance
        disp = (f_n / params.contact_stiffness) * c_in + slip
        pos[i] = pos[i] + disp
        report.contacts.append(ContactPoint(
            sample=i, penetration=float(delta), normal=c_in,
            normal_force=float(f_n), tangential_force=float(f_t),
            mode=mode, slip_displacement=slip))

    report.iterations = 1 if touched else 0
    if touched:
        # pure normal projection until the residual penetration is gone
        for _ in range(MAX_ITERATIONS - 1):
            worst = 0.0
            for i in range(len(pos)):
                delta = phi(pos[i]) + params.tip_radius
                if delta > PENETRATION_TOL:
                    g = grad(pos[i])
                    gn = np.linalg.norm(g)
                    if gn > 1e-12:
                        pos[i] = pos[i] - delta * g / gn
                    worst = max(worst, delta)
            report.iterations += 1
            if worst <= PENETRATION_TOL:
                break
        else:
            report.resolved = False

    out = RodShape(s=shape.s, positions=pos, rotations=shape.rotations,
                   strain=shape.strain)
    return out, report
