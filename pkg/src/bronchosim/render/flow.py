"""Ground-truth optical flow from depth and pose pairs."""

import numpy as np

from .camera import CameraIntrinsics

OCCLUSION_EPS = 1e-4  # m


def compute_optical_flow(depth_t: np.ndarray, pose_t: np.ndarray,
                         pose_t1: np.ndarray, cam: CameraIntrinsics,
                         depth_t1: np.ndarray | None = None,
                         eps_z: float = OCCLUSION_EPS):
    """Forward flow t -> t+1 in pixels, plus validity mask.

    Pixels are backprojected with depth_t, moved through
    pose_t1^-1 o pose_t and reprojected; invalid where depth is missing,
    the reprojection leaves the image, or (when depth_t1 is given) the
    z-compare indicates occlusion.
    """
    h, w = depth_t.shape
    u, v = np.meshgrid(np.arange(w, dtype=np.float64),
                       np.arange(h, dtype=np.float64))
    valid = np.isfinite(depth_t) & (depth_t > 0)
    z = np.where(valid, depth_t, 1.0)

    x = z * (u - cam.cx) / cam.fx
    y = z * (v - cam.cy) / cam.fy
    pts_cam = np.stack([x, y, z], axis=-1)

    rel = np.linalg.inv(pose_t1) @ pose_t   # camera_t1 <- camera_t
    pts1 = pts_cam @ rel[:3, :3].T + rel[:3, 3]

    z1 = pts1[..., 2]
    valid &= z1 > 1e-9
    z1_safe = np.where(valid, z1, 1.0)
    u1 = cam.fx * pts1[..., 0] / z1_safe + cam.cx
    v1 = cam.fy * pts1[..., 1] / z1_safe + cam.cy
    valid &= (u1 >= 0) & (u1 <= w - 1) & (v1 >= 0) & (v1 <= h - 1)

    if depth_t1 is not None:
        sampled = _bilinear(depth_t1, u1, v1)
        valid &= np.abs(sampled - z1) <= eps_z

    flow = np.stack([u1 - u, v1 - v], axis=-1)
    flow[~valid] = 0.0
    return flow, valid


def _bilinear(img: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    h, w = img.shape[:2]
    u0 = np.clip(np.floor(u).astype(int), 0, w - 2)
    v0 = np.clip(np.floor(v).astype(int), 0, h - 2)
    du = np.clip(u - u0, 0.0, 1.0)
    dv = np.clip(v - v0, 0.0, 1.0)
    if img.ndim == 3:
        du = du[..., None]
        dv = dv[..., None]
    top = img[v0, u0] * (1 - du) + img[v0, u0 + 1] * du
    bot = img[v0 + 1, u0] * (1 - du) + img[v0 + 1, u0 + 1] * du
    return top * (1 - dv) + bot * dv


def warp_by_flow(img_t1: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Sample img_t1 at pixel + flow (reconstructs img_t for valid pixels)."""
    h, w = flow.shape[:2]
    u, v = np.meshgrid(np.arange(w, dtype=np.float64),
                       np.arange(h, dtype=np.float64))
    return _bilinear(img_t1.astype(np.float64), u + flow[..., 0], v + flow[..., 1])
