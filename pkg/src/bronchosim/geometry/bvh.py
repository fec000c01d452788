"""Axis-aligned BVH over triangles with numba-backed queries."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .mesh import TriangleMesh

RAY_EPS = 1e-6


@dataclass
class RayHit:
    hit: bool
    t: float = np.inf
    triangle: int = -1
    bary: tuple = (0.0, 0.0, 0.0)
    normal: np.ndarray | None = None
    point: np.ndarray | None = None


class Bvh:
    """Median-split BVH; immutable after construction."""

    def __init__(self, mesh: TriangleMesh, leaf_size: int = 4):
        self.mesh = mesh
        self.leaf_size = int(leaf_size)
        a, b, c = mesh.triangle_corners()
        self.tri_a = np.ascontiguousarray(a)
        self.tri_b = np.ascontiguousarray(b)
        self.tri_c = np.ascontiguousarray(c)
        # Moller-Trumbore precomputation
        self.tri_v0 = self.tri_a
        self.tri_e1 = np.ascontiguousarray(b - a)
        self.tri_e2 = np.ascontiguousarray(c - a)
        self.vertex_normals = np.ascontiguousarray(mesh.vertex_normals())
        self._build()

    def _build(self):
        n = len(self.tri_a)
        lo = np.minimum(np.minimum(self.tri_a, self.tri_b), self.tri_c)
        hi = np.maximum(np.maximum(self.tri_a, self.tri_b), self.tri_c)
        centroids = (lo + hi) * 0.5

        max_nodes = 4 * n + 2
        box_min = np.empty((max_nodes, 3))
        box_max = np.empty((max_nodes, 3))
        left = np.full(max_nodes, -1, dtype=np.int64)
        right = np.full(max_nodes, -1, dtype=np.int64)
        start = np.zeros(max_nodes, dtype=np.int64)
        count = np.zeros(max_nodes, dtype=np.int64)

        order = np.arange(n, dtype=np.int64)
        n_nodes = 1
        # (node index, slice begin, slice end) work list
        stack = [(0, 0, n)]
        while stack:
            node, beg, end = stack.pop()
            idx = order[beg:end]
            box_min[node] = lo[idx].min(axis=0)
            box_max[node] = hi[idx].max(axis=0)
            if end - beg <= self.leaf_size:
                start[node] = beg
                count[node] = end - beg
                continue
            extent = box_max[node] - box_min[node]
            axis = int(np.argmax(extent))
            mid = (beg + end) // 2
            part = np.argpartition(centroids[idx, axis], mid - beg)
            order[beg:end] = idx[part]
            l_node, r_node = n_nodes, n_nodes + 1
            n_nodes += 2
            left[node] = l_node
            right[node] = r_node
            stack.append((l_node, beg, mid))
            stack.append((r_node, mid, end))

        self.box_min = np.ascontiguousarray(box_min[:n_nodes])
        self.box_max = np.ascontiguousarray(box_max[:n_nodes])
        self.left = left[:n_nodes].copy()
        self.right = right[:n_nodes].copy()
        self.start = start[:n_nodes].copy()
        self.count = count[:n_nodes].copy()
        self.tri_order = order

    # -- queries -----------------------------------------------------------

    def _traversal_args(self):
        return (self.box_min, self.box_max, self.left, self.right,
                self.start, self.count, self.tri_order)

    def interpolated_normal(self, tri: int, u: float, v: float) -> np.ndarray:
        t = self.mesh.triangles[tri]
        n = ((1.0 - u - v) * self.vertex_normals[t[0]]
             + u * self.vertex_normals[t[1]]
             + v * self.vertex_normals[t[2]])
        norm = np.linalg.norm(n)
        if norm == 0.0:
            return np.array([0.0, 0.0, 1.0])
        return n / norm

    def closest_distance(self, points: np.ndarray):
        """Unsigned distance from each point to the nearest triangle."""
        points = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
        dist = np.empty(len(points))
        tri = np.empty(len(points), dtype=np.int64)
        kernels.closest_distance_batch(*self._traversal_args(),
                                       self.tri_a, self.tri_b, self.tri_c,
                                       points, dist, tri)
        return dist, tri


def build_bvh(mesh: TriangleMesh, leaf_size: int = 4) -> Bvh:
    return Bvh(mesh, leaf_size=leaf_size)


def raycast(bvh: Bvh, origin, direction, t_max: float = np.inf) -> RayHit:
    """Nearest intersection with t in (1e-6, t_max]; explicit miss otherwise."""
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    t, tri, u, v = kernels.bvh_raycast(
        *bvh._traversal_args(), bvh.tri_v0, bvh.tri_e1, bvh.tri_e2,
        origin[0], origin[1], origin[2],
        direction[0], direction[1], direction[2], RAY_EPS, t_max)
    if tri < 0:
        return RayHit(hit=False)
    n = bvh.interpolated_normal(tri, u, v)
    return RayHit(hit=True, t=float(t), triangle=int(tri),
                  bary=(1.0 - u - v, float(u), float(v)),
                  normal=n, point=origin + t * direction)
