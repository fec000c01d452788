"""Analytic test geometry: masks, SDF grids and meshes with known answers.

Used by the test suite as independent oracles and by the CLI demo configs.
All quantities in meters.
"""

import numpy as np

from .geometry.mask import VoxelMask
from .geometry.mesh import TriangleMesh, clean_mesh
from .geometry.sdf import SdfGrid


# ---------------------------------------------------------------------------
# analytic signed-distance grids
# ---------------------------------------------------------------------------

def sdf_grid_from_function(fn, lo, hi, voxel: float) -> SdfGrid:
    """Sample fn(points (N,3)) -> phi on a regular grid spanning [lo, hi]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    dims = np.maximum(np.ceil((hi - lo) / voxel).astype(int) + 1, 2)
    axes = [lo[k] + voxel * np.arange(dims[k]) for k in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    vals = fn(pts).reshape(tuple(dims))
    return SdfGrid(tuple(dims), (voxel, voxel, voxel), tuple(lo), vals)


def plane_sdf(lo=(-0.01, -0.01, -0.01), hi=(0.01, 0.01, 0.01), voxel=1e-3) -> SdfGrid:
    """Half-space z < 0 interior: phi = z."""
    return sdf_grid_from_function(lambda p: p[:, 2], lo, hi, voxel)


def sphere_sdf(radius: float, voxel: float, margin: float = None) -> SdfGrid:
    if margin is None:
        margin = 4 * voxel
    r = radius + margin
    return sdf_grid_from_function(
        lambda p: np.linalg.norm(p, axis=1) - radius,
        (-r, -r, -r), (r, r, r), voxel)


def cylinder_sdf(radius: float, length: float, voxel: float) -> SdfGrid:
    """Infinite cylinder along z clipped to a finite grid (axis through origin)."""
    m = 4 * voxel
    return sdf_grid_from_function(
        lambda p: np.hypot(p[:, 0], p[:, 1]) - radius,
        (-radius - m, -radius - m, 0.0),
        (radius + m, radius + m, length), voxel)


# ---------------------------------------------------------------------------
# capsule-union solids: distance helpers, masks and SDF grids
# ---------------------------------------------------------------------------

def _segment_distance(pts: np.ndarray, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    t = np.clip((pts - a) @ ab / (ab @ ab), 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1)


def capsule_union_distance(pts: np.ndarray, segments) -> np.ndarray:
    """Signed distance to a union of capsules [(a, b, radius), ...]."""
    d = np.full(len(pts), np.inf)
    for a, b, r in segments:
        d = np.minimum(d, _segment_distance(pts, a, b) - r)
    return d


def _mask_from_distance(fn, lo, hi, voxel: float) -> VoxelMask:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    dims = np.maximum(np.ceil((hi - lo) / voxel).astype(int) + 1, 2)
    axes = [lo[k] + voxel * np.arange(dims[k]) for k in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    occ = (fn(pts) <= 0.0).reshape(tuple(dims))
    return VoxelMask(tuple(dims), (voxel, voxel, voxel), tuple(lo), occ)


def ball_mask(radius_voxels: int = 8, voxel: float = 1e-3) -> VoxelMask:
    r = radius_voxels * voxel
    m = 2 * voxel
    return _mask_from_distance(lambda p: np.linalg.norm(p, axis=1) - r,
                               (-r - m,) * 3, (r + m,) * 3, voxel)


def cylinder_segments(radius: float = 3e-3, length: float = 0.04):
    return [((0.0, 0.0, 0.0), (0.0, 0.0, length), radius)]


def y_segments(trunk_radius: float = 4e-3, branch_radius: float = 2.8e-3,
               trunk_length: float = 0.03, branch_length: float = 0.025,
               branch_angle_deg: float = 35.0):
    """Trunk along +z that splits into two symmetric branches."""
    th = np.deg2rad(branch_angle_deg)
    j = np.array([0.0, 0.0, trunk_length])
    d1 = np.array([np.sin(th), 0.0, np.cos(th)])
    d2 = np.array([-np.sin(th), 0.0, np.cos(th)])
    return [((0.0, 0.0, 0.0), tuple(j), trunk_radius),
            (tuple(j), tuple(j + branch_length * d1), branch_radius),
            (tuple(j), tuple(j + branch_length * d2), branch_radius)]


def _segments_bounds(segments, margin: float):
    pts = np.array([list(s[0]) for s in segments] + [list(s[1]) for s in segments])
    r = max(s[2] for s in segments)
    return pts.min(axis=0) - r - margin, pts.max(axis=0) + r + margin


def capsule_mask(segments, voxel: float) -> VoxelMask:
    lo, hi = _segments_bounds(segments, 2 * voxel)
    return _mask_from_distance(lambda p: capsule_union_distance(p, segments),
                               lo, hi, voxel)


def capsule_sdf(segments, voxel: float) -> SdfGrid:
    lo, hi = _segments_bounds(segments, 4 * voxel)
    return sdf_grid_from_function(lambda p: capsule_union_distance(p, segments),
                                  lo, hi, voxel)


def cylinder_mask(radius: float = 3e-3, length: float = 0.04,
                  voxel: float = 0.5e-3) -> VoxelMask:
    return capsule_mask(cylinder_segments(radius, length), voxel)


def y_mask(voxel: float = 0.5e-3, **kwargs) -> VoxelMask:
    return capsule_mask(y_segments(**kwargs), voxel)


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------

def icosphere(subdivisions: int = 2, radius: float = 1.0) -> TriangleMesh:
    """Subdivided icosahedron; watertight by construction."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    verts = list(verts)
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(m)
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new_faces
    return clean_mesh(np.array(verts) * radius, np.array(faces))


def plane_mesh(half_extent: float = 1.0, z: float = 0.0) -> TriangleMesh:
    """Two-triangle square in the z = const plane (not watertight)."""
    h = half_extent
    verts = np.array([[-h, -h, z], [h, -h, z], [h, h, z], [-h, h, z]])
    faces = np.array([[0, 1, 2], [0, 2, 3]])
    return clean_mesh(verts, faces)


def tube_mesh(radius: float = 4e-3, length: float = 0.05, n_theta: int = 64,
              n_z: int = 40, capped: bool = True) -> TriangleMesh:
    """Cylinder wall along +z starting at z=0, optionally with end caps."""
    theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    zs = np.linspace(0.0, length, n_z)
    verts = []
    for z in zs:
        for th in theta:
            verts.append([radius * np.cos(th), radius * np.sin(th), z])
    faces = []
    for iz in range(n_z - 1):
        for it in range(n_theta):
            a = iz * n_theta + it
            b = iz * n_theta + (it + 1) % n_theta
            c = (iz + 1) * n_theta + it
            d = (iz + 1) * n_theta + (it + 1) % n_theta
            faces += [[a, b, d], [a, d, c]]
    if capped:
        c0 = len(verts)
        verts.append([0.0, 0.0, 0.0])
        c1 = len(verts)
        verts.append([0.0, 0.0, length])
        for it in range(n_theta):
            a = it
            b = (it + 1) % n_theta
            faces.append([c0, b, a])
            a = (n_z - 1) * n_theta + it
            b = (n_z - 1) * n_theta + (it + 1) % n_theta
            faces.append([c1, a, b])
    return clean_mesh(np.array(verts), np.array(faces))
