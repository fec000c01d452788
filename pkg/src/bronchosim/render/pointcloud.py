"""Depth-map backprojection to colored point clouds."""

import numpy as np

from .camera import CameraIntrinsics


def backproject_pointcloud(depth: np.ndarray, rgb: np.ndarray | None,
                           cam: CameraIntrinsics, pose: np.ndarray | None = None,
                           stride: int = 1, world_frame: bool = False):
    """p_cam = depth * K^-1 (u, v, 1) per sampled valid pixel.

    Returns (points (N,3), colors (N,3) uint8 or None). With
    world_frame=True the provided pose (world-from-camera) is applied.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if world_frame and pose is None:
        raise ValueError("world_frame=True requires a pose")
    h, w = depth.shape
    us = np.arange(0, w, stride)
    vs = np.arange(0, h, stride)
    u, v = np.meshgrid(us, vs)
    z = depth[v, u]
    valid = np.isfinite(z) & (z > 0)
    u = u[valid].astype(np.float64)
    v = v[valid].astype(np.float64)
    z = z[valid]

    pts = np.column_stack([z * (u - cam.cx) / cam.fx,
                           z * (v - cam.cy) / cam.fy,
                           z])
    if world_frame:
        pts = pts @ pose[:3, :3].T + pose[:3, 3]

    colors = None
    if rgb is not None:
        colors = rgb[v.astype(int), u.astype(int)]
    return pts, colors
