"""Binary voxel masks and isosurface extraction."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from skimage import measure

from .mesh import TriangleMesh, clean_mesh, signed_volume

log = logging.getLogger(__name__)


@dataclass
class VoxelMask:
    """Dense binary occupancy grid.

    occupancy is indexed [ix, iy, iz]; the canonical flat serialization is
    x-fastest (Fortran order). spacing/origin are in meters.
    """

    dims: tuple
    spacing: tuple
    origin: tuple
    occupancy: np.ndarray

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.spacing = tuple(float(s) for s in self.spacing)
        self.origin = tuple(float(o) for o in self.origin)
        if any(d < 2 for d in self.dims):
            raise ValueError("mask dims must be >= 2 per axis")
        if any(s <= 0 for s in self.spacing):
            raise ValueError("mask spacing must be > 0")
        occ = np.asarray(self.occupancy)
        if occ.shape != self.dims:
            occ = occ.reshape(self.dims, order="F")
        self.occupancy = np.ascontiguousarray(occ.astype(bool))

    @classmethod
    def from_array(cls, occupancy: np.ndarray, spacing, origin=(0.0, 0.0, 0.0)):
        occupancy = np.asarray(occupancy)
        spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (3,))
        return cls(occupancy.shape, tuple(spacing), tuple(origin), occupancy)

    def flat_x_fastest(self) -> np.ndarray:
        return self.occupancy.reshape(-1, order="F")

    def save(self, path) -> None:
        """Raw uint8 occupancy (x-fastest) plus a JSON header sidecar."""
        path = Path(path)
        self.flat_x_fastest().astype(np.uint8).tofile(path)
        header = {"dims": list(self.dims), "spacing": list(self.spacing),
                  "origin": list(self.origin), "dtype": "uint8",
                  "order": "x-fastest"}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(header, indent=2))

    @classmethod
    def load(cls, path) -> "VoxelMask":
        path = Path(path)
        header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        flat = np.fromfile(path, dtype=np.uint8)
        dims = tuple(header["dims"])
        if flat.size != int(np.prod(dims)):
            raise ValueError(f"{path}: occupancy size does not match header dims")
        return cls(dims, tuple(header["spacing"]), tuple(header["origin"]), flat)


def marching_cubes(mask: VoxelMask, iso: float = 0.5) -> TriangleMesh:
    """Extract the closed occupied/empty interface surface in world meters.

    Uses the topology-consistent case table so the result is watertight for
    any solid mask that does not touch the grid boundary.
    """
    if not 0.0 < iso < 1.0:
        raise ValueError("iso must be in (0, 1)")
    occ = mask.occupancy
    if not occ.any() or occ.all():
        raise ValueError("no isosurface: mask is all-empty or all-full")
    verts, faces, _, _ = measure.marching_cubes(
        occ.astype(np.float32), level=iso, spacing=mask.spacing,
        allow_degenerate=False, method="lewiner")
    verts = verts + np.asarray(mask.origin)
    mesh = clean_mesh(verts, faces.astype(np.int64))
    if not mesh.watertight:
        log.warning("marching cubes surface is not closed "
                    "(mask probably touches the grid boundary)")
    elif signed_volume(mesh) < 0:
        # normalize to outward winding for the signed-distance stage
        mesh.triangles = mesh.triangles[:, ::-1].copy()
        mesh.normals = None
    return mesh
