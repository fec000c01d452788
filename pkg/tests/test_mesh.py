import numpy as np
import pytest

from bronchosim.geometry import laplacian_smooth, load_mesh, save_obj
from bronchosim.phantoms import icosphere


def write_obj(path, lines):
    path.write_text("\n".join(lines) + "\n")


def test_single_triangle_obj(tmp_path):
    p = tmp_path / "tri.obj"
    write_obj(p, ["v 0 0 0", "v 1 0 0", "v 0 1 0", "f 1 2 3"])
    mesh = load_mesh(p)
    assert mesh.n_vertices == 3
    assert mesh.n_triangles == 1


def test_zero_area_face_removed(tmp_path, caplog):
    p = tmp_path / "degen.obj"
    write_obj(p, [
        "v 0 0 0", "v 1 0 0", "v 0 1 0", "v 2 0 0",
        "f 1 2 3",
        "f 1 2 4",  # collinear -> zero area
    ])
    with caplog.at_level("WARNING"):
        mesh = load_mesh(p)
    assert mesh.n_triangles == 1
    assert any("degenerate" in r.message for r in caplog.records)


def write_ascii_ply(path, vertices, faces):
    lines = ["ply", "format ascii 1.0",
             f"element vertex {len(vertices)}",
             "property float x", "property float y", "property float z",
             f"element face {len(faces)}",
             "property list uchar int vertex_indices", "end_header"]
    for v in vertices:
        lines.append(f"{v[0]} {v[1]} {v[2]}")
    for f in faces:
        lines.append("3 " + " ".join(str(i) for i in f))
    path.write_text("\n".join(lines) + "\n")


def test_icosphere_ply_watertight(tmp_path):
    sphere = icosphere(subdivisions=3)  # 642 vertices
    assert sphere.n_vertices == 642
    p = tmp_path / "sphere.ply"
    write_ascii_ply(p, sphere.vertices, sphere.triangles)
    mesh = load_mesh(p)
    assert mesh.watertight
    assert mesh.n_vertices == 642


def test_mm_heuristic_rescales(tmp_path, caplog):
    # a 100-unit triangle has to be millimeters
    p = tmp_path / "big.obj"
    write_obj(p, ["v 0 0 0", "v 100 0 0", "v 0 100 0", "f 1 2 3"])
    with caplog.at_level("WARNING"):
        mesh = load_mesh(p)
    assert np.isclose(mesh.vertices.max(), 0.1)
    assert any("millimeters" in r.message for r in caplog.records)


def test_sidecar_units(tmp_path):
    p = tmp_path / "small.obj"
    write_obj(p, ["v 0 0 0", "v 1 0 0", "v 0 1 0", "f 1 2 3"])
    (tmp_path / "small.obj.json").write_text('{"units": "mm"}')
    mesh = load_mesh(p)
    assert np.isclose(mesh.vertices.max(), 1e-3)


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_mesh("/nonexistent/mesh.obj")


def test_obj_round_trip(tmp_path):
    sphere = icosphere(subdivisions=1)
    p = tmp_path / "s.obj"
    save_obj(sphere, p)
    back = load_mesh(p)
    assert back.n_triangles == sphere.n_triangles
    assert np.allclose(back.vertices, sphere.vertices, atol=1e-6)


# -- laplacian smoothing -----------------------------------------------------

def test_smooth_zero_iterations_is_identity():
    sphere = icosphere(subdivisions=1)
    out = laplacian_smooth(sphere, iterations=0)
    assert np.array_equal(out.vertices, sphere.vertices)
    assert np.array_equal(out.triangles, sphere.triangles)


def test_smooth_tetrahedron_collapses_to_centroid():
    verts = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0],
                      [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]])
    tris = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    from bronchosim.geometry import clean_mesh
    mesh = clean_mesh(verts, tris)
    out = laplacian_smooth(mesh, iterations=1, lam=1.0)
    centroid = verts.mean(axis=0)
    assert np.allclose(out.vertices, centroid[None, :], atol=1e-12)


def test_smooth_reduces_radial_noise():
    rng = np.random.default_rng(0)
    sphere = icosphere(subdivisions=3)
    noisy = sphere.vertices * (1.0 + 0.05 * rng.standard_normal(sphere.n_vertices))[:, None]
    from bronchosim.geometry import clean_mesh
    mesh = clean_mesh(noisy, sphere.triangles)

    def rms_radial(v):
        r = np.linalg.norm(v, axis=1)
        return np.sqrt(np.mean((r - r.mean()) ** 2))

    out = laplacian_smooth(mesh, iterations=20, lam=0.5)
    assert rms_radial(out.vertices) < rms_radial(mesh.vertices)
    assert out.n_vertices == mesh.n_vertices
    assert np.array_equal(out.triangles, mesh.triangles)
