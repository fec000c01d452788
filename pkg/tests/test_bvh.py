import numpy as np

from bronchosim.geometry import build_bvh, raycast
from bronchosim.phantoms import icosphere


def brute_force_raycast(mesh, origin, direction, t_max=np.inf):
    """Independent all-triangles Moller-Trumbore loop (vectorized numpy)."""
    a, b, c = mesh.triangle_corners()
    e1 = b - a
    e2 = c - a
    p = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, p)
    ok = np.abs(det) > 1e-14
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = origin - a
    u = np.einsum("ij,ij->i", s, p) * inv
    q = np.cross(s, e1)
    v = (q @ direction) * inv
    t = np.einsum("ij,ij->i", e2, q) * inv
    valid = ok & (u >= -1e-12) & (v >= -1e-12) & (u + v <= 1 + 1e-12) \
        & (t > 1e-6) & (t <= t_max)
    if not valid.any():
        return np.inf, -1
    idx = np.where(valid)[0]
    best = idx[np.argmin(t[idx])]
    return t[best], best


def test_sphere_hit_analytic():
    sphere = icosphere(subdivisions=4)
    bvh = build_bvh(sphere)
    hit = raycast(bvh, np.array([0.0, 0.0, -2.0]), np.array([0.0, 0.0, 1.0]))
    assert hit.hit
    assert abs(hit.t - 1.0) < 5e-3  # faceted sphere
    assert np.allclose(hit.normal, [0, 0, -1], atol=5e-2)
    assert np.allclose(hit.point, [0, 0, -1], atol=5e-3)


def test_miss_is_explicit():
    sphere = icosphere(subdivisions=2)
    bvh = build_bvh(sphere)
    hit = raycast(bvh, np.array([0.0, 0.0, -2.0]), np.array([0.0, 0.0, -1.0]))
    assert not hit.hit
    assert hit.triangle == -1


def test_matches_brute_force_on_random_rays():
    sphere = icosphere(subdivisions=3)
    bvh = build_bvh(sphere)
    rng = np.random.default_rng(42)
    n = 10_000
    origins = rng.uniform(-1.5, 1.5, size=(n, 3))
    dirs = rng.standard_normal((n, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    n_hits = 0
    for o, d in zip(origins, dirs):
        hit = raycast(bvh, o, d)
        t_ref, tri_ref = brute_force_raycast(sphere, o, d)
        if tri_ref < 0:
            assert not hit.hit
        else:
            assert hit.hit
            assert hit.triangle == tri_ref or abs(hit.t - t_ref) <= 1e-9 * max(1.0, t_ref)
            n_hits += 1
    assert n_hits > 1000  # sanity: the test actually exercised hits


def test_t_max_respected():
    sphere = icosphere(subdivisions=2)
    bvh = build_bvh(sphere)
    hit = raycast(bvh, np.array([0.0, 0.0, -2.0]), np.array([0.0, 0.0, 1.0]),
                  t_max=0.5)
    assert not hit.hit
