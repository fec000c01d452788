import numpy as np
import pytest

from bronchosim.phantoms import (capsule_sdf, cylinder_sdf, plane_sdf,
                                 sphere_sdf, y_segments)
from bronchosim.skeleton import (build_centerline_graph, extract_medial_axis,
                                 MedialPointSet, sample_waypoints)
from bronchosim.skeleton.graph import SkeletonBranch, SkeletonGraph, SkeletonNode

VOXEL = 0.5e-3


@pytest.fixture(scope="module")
def cylinder_medial():
    sdf = cylinder_sdf(radius=3e-3, length=0.04, voxel=VOXEL)
    return sdf, extract_medial_axis(sdf, mesh=None, n_surface_samples=2500, seed=1)


def test_cylinder_points_on_axis(cylinder_medial):
    _, medial = cylinder_medial
    assert len(medial) > 100
    axis_dist = np.hypot(medial.points[:, 0], medial.points[:, 1])
    assert np.all(axis_dist <= VOXEL)
    assert np.all(np.abs(medial.radii - 3e-3) <= VOXEL)


def test_sphere_points_at_center():
    sdf = sphere_sdf(radius=4e-3, voxel=VOXEL)
    medial = extract_medial_axis(sdf, mesh=None, n_surface_samples=800, seed=2)
    assert len(medial) > 50
    assert np.all(np.linalg.norm(medial.points, axis=1) <= 2 * VOXEL)


def test_half_space_has_no_medial_axis():
    sdf = plane_sdf(lo=(-5e-3, -5e-3, -5e-3), hi=(5e-3, 5e-3, 5e-3), voxel=1e-3)
    with pytest.raises(ValueError, match="no interior"):
        extract_medial_axis(sdf, mesh=None, n_surface_samples=200, seed=3)


# -- centerline graph ---------------------------------------------------------

def test_cylinder_graph_topology(cylinder_medial):
    _, medial = cylinder_medial
    graph = build_centerline_graph(medial, prune_length=4e-3)
    assert len(graph.endpoints()) == 2
    assert len(graph.bifurcations()) == 0
    assert len(graph.branches) == 1
    assert graph.branches[0].length > 0.03


def test_y_phantom_graph_topology():
    sdf = capsule_sdf(y_segments(), voxel=VOXEL)
    medial = extract_medial_axis(sdf, mesh=None, n_surface_samples=4000, seed=4)
    graph = build_centerline_graph(medial, prune_length=5e-3, sdf=sdf)
    assert len(graph.bifurcations()) == 1
    assert len(graph.endpoints()) == 3
    assert len(graph.branches) == 3


def test_single_cluster_raises():
    pts = np.zeros((5, 3)) + 1e-5 * np.arange(5)[:, None]
    medial = MedialPointSet(points=pts, radii=np.full(5, 1e-3),
                            seed_index=np.arange(5))
    with pytest.raises(ValueError, match="insufficient extent"):
        build_centerline_graph(medial, prune_length=1e-3)


def test_graph_json_round_trip(cylinder_medial, tmp_path):
    _, medial = cylinder_medial
    graph = build_centerline_graph(medial, prune_length=4e-3)
    p = tmp_path / "skeleton.json"
    graph.to_json(p)
    back = SkeletonGraph.from_json(p)
    assert len(back.nodes) == len(graph.nodes)
    assert len(back.branches) == len(graph.branches)
    assert np.allclose(back.branches[0].points, graph.branches[0].points)


# -- waypoints ----------------------------------------------------------------

def straight_graph(length=0.02, radius=3e-3, n=41):
    pts = np.zeros((n, 3))
    pts[:, 2] = np.linspace(0.0, length, n)
    nodes = [SkeletonNode(0, pts[0], "endpoint", radius),
             SkeletonNode(1, pts[-1], "endpoint", radius * 0.9)]
    branch = SkeletonBranch(0, 1, pts, np.full(n, radius), length)
    return SkeletonGraph(nodes=[*nodes], branches=[branch])


def arc_graph(R=0.02, span=np.pi, radius=2e-3, n=200):
    th = np.linspace(0.0, span, n)
    pts = np.column_stack([R * np.sin(th), np.zeros(n), R * (1 - np.cos(th))])
    length = R * span
    nodes = [SkeletonNode(0, pts[0], "endpoint", radius),
             SkeletonNode(1, pts[-1], "endpoint", radius * 0.9)]
    branch = SkeletonBranch(0, 1, pts, np.full(n, radius), length)
    return SkeletonGraph(nodes=[*nodes], branches=[branch])


def test_straight_branch_uniform_spacing():
    base = 1e-3
    seqs = sample_waypoints(straight_graph(), base_spacing=base,
                            curvature_gain=2e-3, bifurcation_gain=2.0)
    assert len(seqs) == 1
    gaps = np.linalg.norm(np.diff(seqs[0].positions, axis=0), axis=1)
    assert np.allclose(gaps, base, atol=1e-9)


def test_arc_spacing_matches_curvature_formula():
    R = 0.02
    base = 1e-3
    gain = 2e-3
    seqs = sample_waypoints(arc_graph(R=R), base_spacing=base,
                            curvature_gain=gain, bifurcation_gain=2.0)
    gaps = np.linalg.norm(np.diff(seqs[0].positions, axis=0), axis=1)
    expected_ds = base / (1.0 + gain / R)
    # chord of an arc of length ds: 2R sin(ds/2R). ds << R so chord ~ ds
    assert np.allclose(gaps[:-1], expected_ds, rtol=2e-3)


def test_timestamps_are_10hz():
    seqs = sample_waypoints(straight_graph(), base_spacing=1e-3)
    ts = seqs[0].timestamps
    assert ts[0] == 0.0
    assert np.allclose(np.diff(ts), 0.1, atol=1e-12)
    assert np.all(np.diff(ts) > 0)


def test_frames_orthonormal_right_handed():
    seqs = sample_waypoints(arc_graph(), base_spacing=1e-3)
    for R in seqs[0].rotations:
        assert np.abs(R.T @ R - np.eye(3)).max() <= 1e-9
        assert np.linalg.det(R) > 0
    # z-axis equals tangent within 1e-6 is implied by construction; probe one
    z = seqs[0].rotations[0][:, 2]
    assert np.isclose(np.linalg.norm(z), 1.0, atol=1e-9)


def test_waypoint_count_monotone_in_curvature_gain():
    counts = []
    for gain in [0.0, 1e-3, 2e-3, 4e-3, 8e-3]:
        seqs = sample_waypoints(arc_graph(), base_spacing=1e-3,
                                curvature_gain=gain)
        counts.append(len(seqs[0]))
    assert all(b >= a for a, b in zip(counts, counts[1:]))


def test_short_path_single_waypoint(caplog):
    with caplog.at_level("WARNING"):
        seqs = sample_waypoints(straight_graph(length=0.5e-3, n=5),
                                base_spacing=1e-3)
    assert len(seqs[0]) == 1
    assert any("single waypoint" in r.message for r in caplog.records)


def test_y_phantom_bifurcation_density_and_corridor():
    sdf = capsule_sdf(y_segments(), voxel=VOXEL)
    medial = extract_medial_axis(sdf, mesh=None, n_surface_samples=4000, seed=4)
    graph = build_centerline_graph(medial, prune_length=5e-3, sdf=sdf)
    seqs = sample_waypoints(graph, base_spacing=1e-3, curvature_gain=2e-3,
                            bifurcation_gain=2.0, tau=5e-3)
    assert len(seqs) == 2

    bif = graph.bifurcations()[0].position
    from bronchosim.geometry import sdf_sample
    for seq in seqs:
        gaps = np.linalg.norm(np.diff(seq.positions, axis=0), axis=1)
        mids = 0.5 * (seq.positions[:-1] + seq.positions[1:])
        d_bif = np.linalg.norm(mids - bif, axis=1)
        near = gaps[d_bif < 2e-3]
        far = gaps[d_bif > 10e-3]
        assert len(near) > 0 and len(far) > 0
        assert near.mean() < far.min()

        # collision corridor: phi(p) <= -0.8 * min branch radius
        min_radius = min(graph.branches[b].radii.min() for b in set(seq.branch_ids))
        phi = sdf_sample(sdf, seq.positions)
        assert np.all(phi <= -0.8 * min_radius)
