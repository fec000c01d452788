import numpy as np
import pytest

from bronchosim.geometry import build_bvh
from bronchosim.phantoms import plane_mesh, tube_mesh
from bronchosim.render import (CameraIntrinsics, Material, RenderSettings,
                               TipLight, backproject_pointcloud,
                               compute_optical_flow, look_at, pose_matrix,
                               render_frame, warp_by_flow)

CAM = CameraIntrinsics()  # 600x600, fx=fy=300, cx=cy=300
LIGHT = TipLight(intensity=2e-4, falloff=20.0)
LAMBERT = Material(base_color=(0.7, 0.5, 0.4), roughness=1.0, metallic=0.0,
                   specular_weight=0.0)


def identity_pose():
    return np.eye(4)


@pytest.fixture(scope="module")
def plane_scene():
    # fronto-parallel plane 10 mm ahead of the camera
    mesh = plane_mesh(half_extent=0.05, z=0.01)
    return build_bvh(mesh)


@pytest.fixture(scope="module")
def tube_scene():
    return build_bvh(tube_mesh(radius=4e-3, length=0.05))


def test_plane_center_depth_and_normal(plane_scene):
    bundle = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                          RenderSettings(spp=1))
    cy, cx = int(CAM.cy), int(CAM.cx)
    assert bundle.depth[cy, cx] == pytest.approx(0.010, abs=1e-6)
    # z-depth is constant across a fronto-parallel plane
    hit = bundle.hit_mask
    assert np.allclose(bundle.depth[hit], 0.010, atol=1e-6)
    assert np.allclose(bundle.normals[cy, cx], [0, 0, -1], atol=1e-6)


def test_plane_lambert_matches_analytic(plane_scene):
    light = TipLight(intensity=2e-4, falloff=0.0)  # alpha = 0
    bundle = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, light,
                          RenderSettings(spp=1, tone_map=False))
    h, w = bundle.depth.shape
    u, v = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    dx = (u - CAM.cx) / CAM.fx
    dy = (v - CAM.cy) / CAM.fy
    inv_len = 1.0 / np.sqrt(dx ** 2 + dy ** 2 + 1.0)
    ray_len = 0.01 / inv_len          # distance to the hit = light distance
    cos_theta = inv_len               # n.omega for fronto-parallel plane
    expected = light.intensity / ray_len ** 2 * cos_theta
    hit = bundle.hit_mask
    for c, albedo in enumerate(LAMBERT.base_color):
        ratio = bundle.rgb_linear[..., c][hit] / (albedo * expected[hit])
        assert np.abs(ratio - 1.0).max() <= 0.02


def test_cylinder_interior_depth_profile(tube_scene):
    pose = identity_pose()
    pose[2, 3] = 0.005  # inside the tube, looking down +z
    bundle = render_frame(tube_scene, LAMBERT, pose, CAM, LIGHT,
                          RenderSettings(spp=1))
    cy, cx = int(CAM.cy), int(CAM.cx)
    # center pixel sees the far cap: largest depth in the image
    assert bundle.depth[cy, cx] == pytest.approx(0.045, abs=1e-6)
    assert bundle.depth[cy, cx] >= bundle.depth[bundle.hit_mask].max() - 1e-9
    # along the horizontal midline the steepest wall ray (45 deg) gives
    # z-depth = radius; image corners see the wall diagonally at r/sqrt(2)
    assert bundle.depth[cy, :].min() == pytest.approx(4e-3, rel=0.05)
    assert bundle.depth[bundle.hit_mask].min() == pytest.approx(4e-3 / np.sqrt(2),
                                                                rel=0.05)
    # vanishing lumen center is darker than the nearby wall
    rgb = bundle.rgb.astype(float).sum(axis=2)
    assert rgb[cy, cx] < np.percentile(rgb[bundle.hit_mask], 50)


def test_depth_independent_of_spp(plane_scene):
    b1 = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                      RenderSettings(spp=1))
    b8 = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                      RenderSettings(spp=8))
    assert np.array_equal(b1.depth, b8.depth)
    assert np.array_equal(b1.normals, b8.normals)


def test_render_deterministic(plane_scene):
    b1 = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                      RenderSettings(spp=4, jitter_seed=9))
    b2 = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                      RenderSettings(spp=4, jitter_seed=9))
    assert np.array_equal(b1.rgb, b2.rgb)


def test_miss_pixels(plane_scene):
    pose = look_at((0, 0, 0.02), (0, 0, 1))  # beyond the plane, looking away
    bundle = render_frame(plane_scene, LAMBERT, pose, CAM, LIGHT,
                          RenderSettings(spp=1))
    assert np.all(np.isinf(bundle.depth))
    assert np.all(bundle.rgb == 0)
    assert np.all(bundle.normals == 0)


# -- optical flow --------------------------------------------------------------

def test_flow_identity(plane_scene):
    bundle = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                          RenderSettings(spp=1), shade=False)
    flow, valid = compute_optical_flow(bundle.depth, identity_pose(),
                                       identity_pose(), CAM)
    assert valid.any()
    assert np.allclose(flow[valid], 0.0, atol=1e-9)


def test_flow_pure_roll_closed_form(plane_scene):
    theta = np.deg2rad(3.0)
    bundle = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                          RenderSettings(spp=1), shade=False)
    c, s = np.cos(theta), np.sin(theta)
    roll = pose_matrix(np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]]),
                       np.zeros(3))
    flow, valid = compute_optical_flow(bundle.depth, identity_pose(), roll, CAM)

    h, w = bundle.depth.shape
    u, v = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    du = u - CAM.cx
    dv = v - CAM.cy
    # camera rolls by +theta about the optical axis: pixels rotate by -theta
    exp_u = c * du + s * dv - du
    exp_v = -s * du + c * dv - dv
    assert np.abs(flow[..., 0][valid] - exp_u[valid]).max() <= 1e-6
    assert np.abs(flow[..., 1][valid] - exp_v[valid]).max() <= 1e-6


def test_flow_z_translation_radial(plane_scene):
    bundle = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                          RenderSettings(spp=1), shade=False)
    fwd = pose_matrix(np.eye(3), np.array([0, 0, 2e-3]))  # toward the plane
    flow, valid = compute_optical_flow(bundle.depth, identity_pose(), fwd, CAM)
    cy, cx = int(CAM.cy), int(CAM.cx)
    assert valid[cy, cx]
    assert np.allclose(flow[cy, cx], 0.0, atol=1e-9)  # zero at principal point
    # radially expanding: flow points away from the principal point
    h, w = bundle.depth.shape
    u, v = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    du = u - CAM.cx
    dv = v - CAM.cy
    dot = flow[..., 0] * du + flow[..., 1] * dv
    off_center = valid & (np.hypot(du, dv) > 5)
    assert np.all(dot[off_center] > 0)


def test_flow_warp_photometric(plane_scene):
    # pure roll with the light on the optical axis keeps shading identical
    theta = np.deg2rad(2.0)
    c, s = np.cos(theta), np.sin(theta)
    roll = pose_matrix(np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]]),
                       np.zeros(3))
    b0 = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                      RenderSettings(spp=1))
    b1 = render_frame(plane_scene, LAMBERT, roll, CAM, LIGHT,
                      RenderSettings(spp=1))
    flow, valid = compute_optical_flow(b0.depth, identity_pose(), roll, CAM,
                                       depth_t1=b1.depth)
    warped = warp_by_flow(b1.rgb.astype(float) / 255.0, flow)
    target = b0.rgb.astype(float) / 255.0
    mae = np.abs(warped[valid] - target[valid]).mean()
    assert mae <= 2.0 / 255.0


# -- point clouds ---------------------------------------------------------------

def test_backproject_principal_pixel(plane_scene):
    depth = np.full((600, 600), np.inf)
    depth[300, 300] = 0.042
    pts, _ = backproject_pointcloud(depth, None, CAM)
    assert pts.shape == (1, 3)
    assert np.allclose(pts[0], [0, 0, 0.042], atol=1e-12)


def test_backproject_plane_residual(plane_scene):
    bundle = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                          RenderSettings(spp=1), shade=False)
    pts, _ = backproject_pointcloud(bundle.depth, None, CAM, stride=4)
    assert len(pts) > 1000
    assert np.abs(pts[:, 2] - 0.01).max() <= 1e-6


def test_backproject_reproject_round_trip(plane_scene):
    bundle = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                          RenderSettings(spp=1), shade=False)
    h, w = bundle.depth.shape
    u, v = np.meshgrid(np.arange(w), np.arange(h))
    hit = bundle.hit_mask
    pts, _ = backproject_pointcloud(bundle.depth, None, CAM)
    u2 = CAM.fx * pts[:, 0] / pts[:, 2] + CAM.cx
    v2 = CAM.fy * pts[:, 1] / pts[:, 2] + CAM.cy
    assert np.abs(u2 - u[hit]).max() <= 1e-6
    assert np.abs(v2 - v[hit]).max() <= 1e-6


def test_backproject_cylinder_radial_residual(tube_scene):
    pose = identity_pose()
    pose[2, 3] = 0.005
    bundle = render_frame(tube_scene, LAMBERT, pose, CAM, LIGHT,
                          RenderSettings(spp=1), shade=False)
    pts, _ = backproject_pointcloud(bundle.depth, None, CAM, pose=pose,
                                    stride=3, world_frame=True)
    # drop cap hits; walls have x^2+y^2 = r^2
    wall = pts[pts[:, 2] < 0.049]
    rho = np.hypot(wall[:, 0], wall[:, 1])
    rms = np.sqrt(np.mean((rho - 4e-3) ** 2))
    assert rms <= 0.25e-3  # half of the 0.5 mm reference voxel


def test_world_frame_requires_pose():
    with pytest.raises(ValueError, match="pose"):
        backproject_pointcloud(np.ones((4, 4)), None, CAM, world_frame=True)


def test_spp4_matches_spp1_on_smooth_scene(plane_scene):
    # jitter is sub-pixel, so multi-sample shading must stay close to the
    # center-ray image away from geometry edges
    b1 = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                      RenderSettings(spp=1, tone_map=False))
    b4 = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                      RenderSettings(spp=4, jitter_seed=3871623459,
                                     tone_map=False))
    inner = np.s_[5:-5, 5:-5]
    rel = np.abs(b4.rgb_linear[inner] - b1.rgb_linear[inner]) \
        / np.maximum(b1.rgb_linear[inner], 1e-9)
    assert np.median(rel) < 0.01
    assert rel.max() < 0.10


def test_texture_modulates_but_preserves_hue(plane_scene):
    from bronchosim.render import SurfaceTexture
    tex = SurfaceTexture(enabled=True, scale=5e-3, color_amplitude=0.25,
                         roughness_amplitude=0.2, seed=3)
    base = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                        RenderSettings(spp=1, tone_map=False))
    textured = render_frame(plane_scene, LAMBERT, identity_pose(), CAM, LIGHT,
                            RenderSettings(spp=1, tone_map=False, texture=tex))
    hit = base.hit_mask
    # visible variation, bounded by the configured amplitude
    ratio = textured.rgb_linear[..., 0][hit] / base.rgb_linear[..., 0][hit]
    assert ratio.std() > 0.01
    assert ratio.min() > 0.5 and ratio.max() < 1.5
    # per-channel ratios identical: the modulation is achromatic
    r2 = textured.rgb_linear[..., 1][hit] / base.rgb_linear[..., 1][hit]
    assert np.allclose(ratio, r2, atol=1e-9)
