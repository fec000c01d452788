from .mesh import (TriangleMesh, load_mesh, save_obj, laplacian_smooth,
                   clean_mesh, is_edge_manifold_closed, read_ply)
from .mask import VoxelMask, marching_cubes
from .bvh import Bvh, RayHit, build_bvh, raycast
from .sdf import SdfGrid, build_sdf, sdf_sample, sdf_gradient, sdf_second_derivative

__all__ = [
    "TriangleMesh", "load_mesh", "save_obj", "laplacian_smooth", "clean_mesh",
    "is_edge_manifold_closed", "read_ply",
    "VoxelMask", "marching_cubes",
    "Bvh", "RayHit", "build_bvh", "raycast",
    "SdfGrid", "build_sdf", "sdf_sample", "sdf_gradient", "sdf_second_derivative",
]
