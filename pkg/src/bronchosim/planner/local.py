"""Single-frame local planner: depth map in, collision-free polyline out.

Cross-entropy style search over smooth polylines: sample control-point
perturbations, keep the elite fraction, refit, repeat. Collision checking
covers the swept volume with spheres spaced half a robot radius apart.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from ..render.camera import CameraIntrinsics
from ..render.pointcloud import backproject_pointcloud

log = logging.getLogger(__name__)

TOP_DEPTH_FRACTION = 0.01
BARRIER_WEIGHT = 1e3


@dataclass
class LocalMap:
    """Point cloud obstacles (camera frame) with a radius-search index."""

    points: np.ndarray
    robot_radius: float

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        finite = np.all(np.isfinite(self.points), axis=1)
        self.points = self.points[finite]
        if self.robot_radius <= 0:
            raise ValueError("robot_radius must be positive")
        self._tree = cKDTree(self.points) if len(self.points) else None

    def min_distance(self, queries: np.ndarray) -> np.ndarray:
        if self._tree is None:
            return np.full(len(np.atleast_2d(queries)), np.inf)
        d, _ = self._tree.query(np.atleast_2d(queries))
        return d

    @classmethod
    def from_depth(cls, depth, cam: CameraIntrinsics, robot_radius: float,
                   stride: int = 4) -> "LocalMap":
        pts, _ = backproject_pointcloud(depth, None, cam, stride=stride)
        return cls(pts, robot_radius)


@dataclass
class PlanResult:
    success: bool
    path: np.ndarray | None        # (M+2, 3) control polyline incl. endpoints
    cost: float
    sphere_centers: np.ndarray | None = None
    iterations: int = 0
    message: str = ""

    def to_json(self, path=None) -> str:
        doc = {"success": self.success, "cost": self.cost,
               "iterations": self.iterations, "message": self.message,
               "path": None if self.path is None else self.path.tolist()}
        text = json.dumps(doc, indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text


def farthest_visible_point(depth: np.ndarray, cam: CameraIntrinsics) -> np.ndarray:
    """Centroid of the backprojected top-1% deepest valid pixels."""
    valid = np.isfinite(depth) & (depth > 0)
    if not valid.any():
        raise ValueError("no valid depth pixels")
    vals = depth[valid]
    k = max(1, int(np.ceil(TOP_DEPTH_FRACTION * vals.size)))
    threshold = np.partition(vals, vals.size - k)[vals.size - k]
    mask = valid & (depth >= threshold)
    v, u = np.nonzero(mask)
    z = depth[mask]
    pts = np.column_stack([z * (u - cam.cx) / cam.fx,
                           z * (v - cam.cy) / cam.fy,
                           z])
    return pts.mean(axis=0)


def _interpolate_spheres(path: np.ndarray, spacing: float) -> np.ndarray:
    """Sphere centers along the polyline, spaced <= `spacing` apart."""
    centers = [path[0]]
    for a, b in zip(path[:-1], path[1:]):
        seg = np.linalg.norm(b - a)
        n = max(int(np.ceil(seg / spacing)), 1)
        for k in range(1, n + 1):
            centers.append(a + (b - a) * (k / n))
    return np.asarray(centers)


def _path_length(path: np.ndarray) -> float:
    return float(np.linalg.norm(np.diff(path, axis=0), axis=1).sum())


def plan_local_path(local_map: LocalMap, start, goal, n_samples: int = 64,
                    n_control: int = 8, iterations: int = 50,
                    seed: int = 0) -> PlanResult:
    """Elite-selection stochastic optimization over smooth polylines.

    Cost = path length + barrier penalty per sphere-cloud violation. The
    straight segment is always evaluated, so whenever it is feasible the
    returned cost never exceeds it.
    """
    start = np.asarray(start, dtype=np.float64)
    goal = np.asarray(goal, dtype=np.float64)
    spacing = local_map.robot_radius / 2.0

    if local_map.min_distance(start[None])[0] < local_map.robot_radius:
        return PlanResult(False, None, np.inf,
                          message="start is in collision")

    def assemble(controls):
        return np.vstack([start[None], controls, goal[None]])

    def cost_of(path):
        spheres = _interpolate_spheres(path, spacing)
        d = local_map.min_distance(spheres)
        violation = np.maximum(local_map.robot_radius - d, 0.0)
        penalty = BARRIER_WEIGHT * (violation.sum() + 10.0 * (violation > 0).sum()
                                    * local_map.robot_radius)
        return _path_length(path) + penalty, penalty == 0.0, spheres

    if len(local_map.points) == 0:
        path = assemble(np.linspace(start, goal, n_control + 2)[1:-1])
        cost, _, spheres = cost_of(path)
        return PlanResult(True, path, cost, spheres, 0, "empty map")

    rng = np.random.Generator(np.random.Philox(key=seed))
    t = np.linspace(0.0, 1.0, n_control + 2)[1:-1][:, None]
    mean = start + t * (goal - start)
    sigma = np.full((n_control, 3), 0.4 * np.linalg.norm(goal - start)
                    / max(n_control, 1))

    best_path = None
    best_cost = np.inf
    best_feasible = False
    best_spheres = None

    # always consider the straight line itself
    straight = assemble(mean.copy())
    c, feas, spheres = cost_of(straight)
    if feas:
        best_path, best_cost, best_feasible, best_spheres = straight, c, True, spheres
    infeasible_best = (straight, c)

    n_elite = max(n_samples // 8, 2)
    for it in range(iterations):
        noise = rng.standard_normal((n_samples, n_control, 3)) * sigma[None]
        candidates = mean[None] + noise
        candidates[0] = mean  # keep the current mean in the pool
        costs = np.empty(n_samples)
        feasibles = np.zeros(n_samples, dtype=bool)
        for k in range(n_samples):
            path = assemble(candidates[k])
            costs[k], feasibles[k], spheres_k = cost_of(path)
            if feasibles[k] and costs[k] < best_cost:
                best_path = path
                best_cost = costs[k]
                best_feasible = True
                best_spheres = spheres_k
            if costs[k] < infeasible_best[1]:
                infeasible_best = (path, costs[k])
        elite = candidates[np.argsort(costs)[:n_elite]]
        mean = elite.mean(axis=0)
        sigma = elite.std(axis=0) + 1e-5
        if best_feasible and float(sigma.max()) < 1e-4:
            break

    if not best_feasible:
        return PlanResult(False, None, infeasible_best[1],
                          iterations=iterations,
                          message="no feasible path within iteration budget")
    # final exhaustive feasibility check on the returned path
    spheres = _interpolate_spheres(best_path, spacing)
    assert np.all(local_map.min_distance(spheres) >= local_map.robot_radius - 1e-12)
    return PlanResult(True, best_path, best_cost, spheres, iterations=it + 1)


def export_path_overlay(result: PlanResult, path) -> None:
    """Path vertices + collision spheres as a point cloud PLY for viewers."""
    from ..dataset.formats import write_ply_points
    if not result.success:
        raise ValueError("cannot export a failed plan")
    pts = np.vstack([result.path, result.sphere_centers])
    colors = np.zeros((len(pts), 3), dtype=np.uint8)
    colors[:len(result.path)] = (255, 40, 40)      # path vertices
    colors[len(result.path):] = (90, 160, 255)     # sphere centers
    write_ply_points(path, pts, colors)
