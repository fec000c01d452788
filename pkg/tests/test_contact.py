import numpy as np
import pytest

from bronchosim.geometry import sdf_sample
from bronchosim.phantoms import cylinder_sdf, plane_sdf
from bronchosim.robot import RobotConfig, RobotParams, rod_shape, step_quasi_static
from bronchosim.robot.rod import RodShape

PARAMS = RobotParams()


def single_sample_shape(p):
    return RodShape(s=np.array([0.0]), positions=np.array([p], dtype=float),
                    rotations=np.eye(3)[None], strain=np.zeros(3))


def test_free_space_identity():
    sdf = cylinder_sdf(radius=20e-3, length=0.1, voxel=1e-3)
    shape = rod_shape(RobotConfig(0.0, 0.0, 0.01), PARAMS)
    out, report = step_quasi_static(shape, sdf, PARAMS, np.zeros(3), 0.1)
    assert len(report) == 0
    assert np.array_equal(out.positions, shape.positions)


def test_plane_penetration_force():
    sdf = plane_sdf(lo=(-0.02, -0.02, -0.02), hi=(0.02, 0.02, 0.02), voxel=1e-3)
    delta = 0.5e-3
    # phi(p) = z, so phi + tip_radius = delta at z = delta - tip_radius
    p = np.array([0.0, 0.0, delta - PARAMS.tip_radius])
    out, report = step_quasi_static(single_sample_shape(p), sdf, PARAMS,
                                    np.zeros(3), 0.1)
    assert len(report) == 1
    c = report.contacts[0]
    assert c.normal_force == pytest.approx(PARAMS.contact_stiffness * delta, rel=1e-9)
    assert np.allclose(c.normal, [0, 0, -1], atol=1e-9)
    assert c.mode == "stick"
    assert np.allclose(c.slip_displacement, 0.0)
    # resolved out of the wall
    assert sdf_sample(sdf, out.positions[0]) + PARAMS.tip_radius <= 1e-6


def test_coulomb_cone_boundary():
    sdf = plane_sdf(lo=(-0.02, -0.02, -0.02), hi=(0.02, 0.02, 0.02), voxel=1e-3)
    delta = 0.5e-3
    dt = 0.1
    p = np.array([0.0, 0.0, delta - PARAMS.tip_radius])
    f_n = PARAMS.contact_stiffness * delta
    # tangential demand k*|v_t|*dt hits the static cone at v_star
    v_star = PARAMS.mu_static * f_n / (PARAMS.contact_stiffness * dt)

    _, below = step_quasi_static(single_sample_shape(p), sdf, PARAMS,
                                 np.array([v_star * 0.999, 0, 0]), dt)
    assert below.contacts[0].mode == "stick"
    assert np.allclose(below.contacts[0].slip_displacement, 0.0)

    _, above = step_quasi_static(single_sample_shape(p), sdf, PARAMS,
                                 np.array([v_star * 1.001, 0, 0]), dt)
    c = above.contacts[0]
    assert c.mode == "slip"
    assert c.tangential_force == pytest.approx(PARAMS.mu_dynamic * f_n, rel=1e-6)
    # slip opposes the tangential velocity
    assert c.slip_displacement[0] < 0


def test_contact_never_increases_penetration():
    sdf = cylinder_sdf(radius=3.5e-3, length=0.1, voxel=0.5e-3)
    shape = rod_shape(RobotConfig(0.006, 0.0, 0.01), PARAMS)
    pen_before = sdf_sample(sdf, shape.positions) + PARAMS.tip_radius
    out, report = step_quasi_static(shape, sdf, PARAMS,
                                    np.array([1e-3, 0, 0]), 0.1)
    pen_after = sdf_sample(sdf, out.positions) + PARAMS.tip_radius
    assert len(report) > 0
    assert report.resolved
    assert np.all(pen_after <= np.maximum(pen_before, 1e-6) + 1e-12)
