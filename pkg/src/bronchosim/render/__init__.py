from .camera import (CameraIntrinsics, pose_matrix, quat_to_matrix,
                     matrix_to_quat, look_at)
from .scene import (Material, TipLight, SurfaceTexture, RenderSettings,
                    srgb_encode, srgb_decode, tone_map_to_u8)
from .frame import FrameBundle, render_frame
from .flow import compute_optical_flow, warp_by_flow
from .pointcloud import backproject_pointcloud

__all__ = [
    "CameraIntrinsics", "pose_matrix", "quat_to_matrix", "matrix_to_quat",
    "look_at",
    "Material", "TipLight", "SurfaceTexture", "RenderSettings",
    "srgb_encode", "srgb_decode", "tone_map_to_u8",
    "FrameBundle", "render_frame",
    "compute_optical_flow", "warp_by_flow",
    "backproject_pointcloud",
]
