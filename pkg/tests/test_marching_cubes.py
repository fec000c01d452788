import numpy as np
import pytest

from bronchosim.geometry import VoxelMask, marching_cubes, is_edge_manifold_closed
from bronchosim.phantoms import ball_mask


def euler_characteristic(mesh):
    e = np.concatenate([mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]],
                        mesh.triangles[:, [2, 0]]])
    n_edges = len(np.unique(np.sort(e, axis=1), axis=0))
    return mesh.n_vertices - n_edges + mesh.n_triangles


def test_ball_is_closed_genus_zero():
    mesh = marching_cubes(ball_mask(radius_voxels=8))
    assert is_edge_manifold_closed(mesh)
    assert euler_characteristic(mesh) == 2


def test_single_voxel_watertight():
    occ = np.zeros((3, 3, 3), dtype=bool)
    occ[1, 1, 1] = True
    mask = VoxelMask.from_array(occ, spacing=1e-3)
    mesh = marching_cubes(mask)
    assert mesh.watertight
    assert is_edge_manifold_closed(mesh)


def test_empty_mask_raises():
    mask = VoxelMask.from_array(np.zeros((4, 4, 4), dtype=bool), spacing=1e-3)
    with pytest.raises(ValueError, match="no isosurface"):
        marching_cubes(mask)


def test_full_mask_raises():
    mask = VoxelMask.from_array(np.ones((4, 4, 4), dtype=bool), spacing=1e-3)
    with pytest.raises(ValueError, match="no isosurface"):
        marching_cubes(mask)


def test_world_coordinates_respect_origin_and_spacing():
    occ = np.zeros((5, 5, 5), dtype=bool)
    occ[2, 2, 2] = True
    mask = VoxelMask(occ.shape, (2e-3, 2e-3, 2e-3), (0.1, 0.2, 0.3), occ)
    mesh = marching_cubes(mask)
    center = mesh.vertices.mean(axis=0)
    assert np.allclose(center, [0.1 + 2 * 2e-3, 0.2 + 2 * 2e-3, 0.3 + 2 * 2e-3],
                       atol=1e-9)
