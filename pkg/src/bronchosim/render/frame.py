"""Per-pose multi-pass rendering into a FrameBundle."""

from dataclasses import dataclass, field

import numpy as np

from ..geometry.bvh import Bvh
from . import kernel
from .camera import CameraIntrinsics
from .scene import Material, RenderSettings, TipLight, tone_map_to_u8


@dataclass
class FrameBundle:
    """One timestep of synchronized sensor outputs.

    rgb is 8-bit sRGB; rgb_linear keeps the pre-tonemap radiance so the
    noise stage can work in linear intensity. depth is z-depth in meters
    with +inf on miss; normals are unit camera-frame vectors (zero on miss).
    """

    rgb: np.ndarray
    depth: np.ndarray
    normals: np.ndarray
    pose: np.ndarray
    timestamp: float
    rgb_linear: np.ndarray | None = None
    flow: np.ndarray | None = None
    flow_valid: np.ndarray | None = None
    point_cloud: np.ndarray | None = None       # (N,3)
    point_colors: np.ndarray | None = None      # (N,3) uint8
    point_frame: str = "camera"
    meta: dict = field(default_factory=dict)

    @property
    def hit_mask(self) -> np.ndarray:
        return np.isfinite(self.depth)


def render_frame(bvh: Bvh, material: Material, pose: np.ndarray,
                 cam: CameraIntrinsics, light: TipLight,
                 settings: RenderSettings | None = None,
                 timestamp: float = 0.0, shade: bool = True) -> FrameBundle:
    """Trace depth/normal passes plus jittered RGB shading.

    Depth and normals always come from the pixel-center ray, so they are
    identical for any spp. With shade=False only those passes run.
    """
    settings = settings or RenderSettings()
    if settings.spp < 1:
        raise ValueError("spp must be >= 1")
    pose = np.asarray(pose, dtype=np.float64)
    cam_R = np.ascontiguousarray(pose[:3, :3])
    cam_t = np.ascontiguousarray(pose[:3, 3])
    light_pos = cam_t + cam_R @ np.asarray(light.offset, dtype=float)

    h, w = cam.height, cam.width
    depth = np.empty((h, w))
    normals = np.zeros((h, w, 3))
    rgb_linear = np.zeros((h, w, 3))
    tex = settings.texture

    kernel.render_passes(
        bvh.box_min, bvh.box_max, bvh.left, bvh.right, bvh.start, bvh.count,
        bvh.tri_order, bvh.tri_v0, bvh.tri_e1, bvh.tri_e2,
        bvh.mesh.triangles, bvh.vertex_normals,
        w, h, cam.fx, cam.fy, cam.cx, cam.cy,
        cam_R, cam_t,
        light_pos, light.intensity, light.falloff,
        material.base_color[0], material.base_color[1], material.base_color[2],
        material.roughness, material.metallic, material.specular_weight,
        tex.enabled, tex.scale, tex.color_amplitude, tex.roughness_amplitude,
        tex.seed,
        settings.ambient, settings.spp, settings.jitter_seed, shade,
        depth, normals, rgb_linear)

    if shade:
        rgb = tone_map_to_u8(rgb_linear, settings.exposure, settings.tone_map)
    else:
        rgb = np.zeros((h, w, 3), dtype=np.uint8)
    return FrameBundle(rgb=rgb, depth=depth, normals=normals, pose=pose,
                       timestamp=timestamp, rgb_linear=rgb_linear)
