"""Numba kernels shared by the geometry stack.

Everything here operates on flat numpy arrays so the same compiled code
serves the SDF builder, the raycaster and the renderer. BVH nodes are
stored structure-of-arrays style: ``box_min/box_max`` per node, inner
nodes reference two children, leaves reference a contiguous run of
triangle indices in ``tri_order``.
"""

import numpy as np
from numba import njit, prange

FOUR_PI = 4.0 * np.pi


# ---------------------------------------------------------------------------
# point / triangle
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _dot3(ax, ay, az, bx, by, bz):
    return ax * bx + ay * by + az * bz


@njit(cache=True)
def closest_point_triangle(px, py, pz, ax, ay, az, bx, by, bz, cx, cy, cz):
    """Closest point on triangle abc to p (Ericson's region method)."""
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    apx, apy, apz = px - ax, py - ay, pz - az

    d1 = _dot3(abx, aby, abz, apx, apy, apz)
    d2 = _dot3(acx, acy, acz, apx, apy, apz)
    if d1 <= 0.0 and d2 <= 0.0:
        return ax, ay, az

    bpx, bpy, bpz = px - bx, py - by, pz - bz
    d3 = _dot3(abx, aby, abz, bpx, bpy, bpz)
    d4 = _dot3(acx, acy, acz, bpx, bpy, bpz)
    if d3 >= 0.0 and d4 <= d3:
        return bx, by, bz

    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        return ax + v * abx, ay + v * aby, az + v * abz

    cpx, cpy, cpz = px - cx, py - cy, pz - cz
    d5 = _dot3(abx, aby, abz, cpx, cpy, cpz)
    d6 = _dot3(acx, acy, acz, cpx, cpy, cpz)
    if d6 >= 0.0 and d5 <= d6:
        return cx, cy, cz

    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        return ax + w * acx, ay + w * acy, az + w * acz

    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return bx + w * (cx - bx), by + w * (cy - by), bz + w * (cz - bz)

    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return ax + abx * v + acx * w, ay + aby * v + acy * w, az + abz * v + acz * w


@njit(cache=True, inline="always")
def _box_dist_sq(px, py, pz, mnx, mny, mnz, mxx, mxy, mxz):
    dx = max(mnx - px, 0.0, px - mxx)
    dy = max(mny - py, 0.0, py - mxy)
    dz = max(mnz - pz, 0.0, pz - mxz)
    return dx * dx + dy * dy + dz * dz


# ---------------------------------------------------------------------------
# BVH traversal
# ---------------------------------------------------------------------------

@njit(cache=True)
def bvh_raycast(box_min, box_max, left, right, start, count, tri_order,
                v0, e1, e2, ox, oy, oz, dx, dy, dz, t_min, t_max):
    """Nearest Moller-Trumbore hit along one ray.

    Returns (t, tri, u, v); tri == -1 on miss.
    """
    inv_x = 1.0 / dx if dx != 0.0 else np.inf
    inv_y = 1.0 / dy if dy != 0.0 else np.inf
    inv_z = 1.0 / dz if dz != 0.0 else np.inf

    best_t = t_max
    best_tri = -1
    best_u = 0.0
    best_v = 0.0

    stack = np.empty(128, dtype=np.int64)
    entry = np.empty(128)
    top = 0
    stack[top] = 0
    entry[top] = 0.0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if entry[top] > best_t:
            continue

        # slab test against current best
        tx1 = (box_min[node, 0] - ox) * inv_x
        tx2 = (box_max[node, 0] - ox) * inv_x
        tn = min(tx1, tx2)
        tf = max(tx1, tx2)
        ty1 = (box_min[node, 1] - oy) * inv_y
        ty2 = (box_max[node, 1] - oy) * inv_y
        tn = max(tn, min(ty1, ty2))
        tf = min(tf, max(ty1, ty2))
        tz1 = (box_min[node, 2] - oz) * inv_z
        tz2 = (box_max[node, 2] - oz) * inv_z
        tn = max(tn, min(tz1, tz2))
        tf = min(tf, max(tz1, tz2))
        if tn > tf or tf < t_min or tn > best_t:
            continue

        if count[node] > 0:  # leaf
            for k in range(start[node], start[node] + count[node]):
                tri = tri_order[k]
                px = dy * e2[tri, 2] - dz * e2[tri, 1]
                py = dz * e2[tri, 0] - dx * e2[tri, 2]
                pz = dx * e2[tri, 1] - dy * e2[tri, 0]
                det = e1[tri, 0] * px + e1[tri, 1] * py + e1[tri, 2] * pz
                if abs(det) < 1e-14:
                    continue
                inv_det = 1.0 / det
                sx = ox - v0[tri, 0]
                sy = oy - v0[tri, 1]
                sz = oz - v0[tri, 2]
                u = (sx * px + sy * py + sz * pz) * inv_det
                if u < -1e-12 or u > 1.0 + 1e-12:
                    continue
                qx = sy * e1[tri, 2] - sz * e1[tri, 1]
                qy = sz * e1[tri, 0] - sx * e1[tri, 2]
                qz = sx * e1[tri, 1] - sy * e1[tri, 0]
                v = (dx * qx + dy * qy + dz * qz) * inv_det
                if v < -1e-12 or u + v > 1.0 + 1e-12:
                    continue
                t = (e2[tri, 0] * qx + e2[tri, 1] * qy + e2[tri, 2] * qz) * inv_det
                if t_min < t <= best_t:
                    best_t = t
                    best_tri = tri
                    best_u = u
                    best_v = v
        else:
            # near child on top of the stack for earlier termination
            l = left[node]
            r = right[node]
            tl = _box_entry(box_min, box_max, l, ox, oy, oz, inv_x, inv_y, inv_z)
            tr = _box_entry(box_min, box_max, r, ox, oy, oz, inv_x, inv_y, inv_z)
            if tl <= tr:
                stack[top] = r
                entry[top] = tr
                top += 1
                stack[top] = l
                entry[top] = tl
                top += 1
            else:
                stack[top] = l
                entry[top] = tl
                top += 1
                stack[top] = r
                entry[top] = tr
                top += 1

    if best_tri < 0:
        return t_max, -1, 0.0, 0.0
    return best_t, best_tri, best_u, best_v


@njit(cache=True, inline="always")
def _box_entry(box_min, box_max, node, ox, oy, oz, inv_x, inv_y, inv_z):
    tx1 = (box_min[node, 0] - ox) * inv_x
    tx2 = (box_max[node, 0] - ox) * inv_x
    tn = min(tx1, tx2)
    tf = max(tx1, tx2)
    ty1 = (box_min[node, 1] - oy) * inv_y
    ty2 = (box_max[node, 1] - oy) * inv_y
    tn = max(tn, min(ty1, ty2))
    tf = min(tf, max(ty1, ty2))
    tz1 = (box_min[node, 2] - oz) * inv_z
    tz2 = (box_max[node, 2] - oz) * inv_z
    tn = max(tn, min(tz1, tz2))
    tf = min(tf, max(tz1, tz2))
    if tn > tf or tf < 0.0:
        return np.inf
    return max(tn, 0.0)


@njit(cache=True)
def bvh_closest(box_min, box_max, left, right, start, count, tri_order,
                tri_a, tri_b, tri_c, px, py, pz):
    """Squared distance to the nearest triangle plus its index and point."""
    best = np.inf
    best_tri = -1
    qx = qy = qz = 0.0

    stack = np.empty(128, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if _box_dist_sq(px, py, pz,
                        box_min[node, 0], box_min[node, 1], box_min[node, 2],
                        box_max[node, 0], box_max[node, 1], box_max[node, 2]) >= best:
            continue
        if count[node] > 0:
            for k in range(start[node], start[node] + count[node]):
                tri = tri_order[k]
                cxp, cyp, czp = closest_point_triangle(
                    px, py, pz,
                    tri_a[tri, 0], tri_a[tri, 1], tri_a[tri, 2],
                    tri_b[tri, 0], tri_b[tri, 1], tri_b[tri, 2],
                    tri_c[tri, 0], tri_c[tri, 1], tri_c[tri, 2])
                dxp = px - cxp
                dyp = py - cyp
                dzp = pz - czp
                d2 = dxp * dxp + dyp * dyp + dzp * dzp
                if d2 < best:
                    best = d2
                    best_tri = tri
                    qx, qy, qz = cxp, cyp, czp
        else:
            l = left[node]
            r = right[node]
            dl = _box_dist_sq(px, py, pz, box_min[l, 0], box_min[l, 1], box_min[l, 2],
                              box_max[l, 0], box_max[l, 1], box_max[l, 2])
            dr = _box_dist_sq(px, py, pz, box_min[r, 0], box_min[r, 1], box_min[r, 2],
                              box_max[r, 0], box_max[r, 1], box_max[r, 2])
            # push the farther child first so the nearer one is processed next
            if dl <= dr:
                stack[top] = r
                top += 1
                stack[top] = l
                top += 1
            else:
                stack[top] = l
                top += 1
                stack[top] = r
                top += 1
    return best, best_tri, qx, qy, qz


@njit(cache=True, parallel=True)
def closest_distance_batch(box_min, box_max, left, right, start, count, tri_order,
                           tri_a, tri_b, tri_c, points, out_dist, out_tri):
    for i in prange(points.shape[0]):
        d2, tri, _, _, _ = bvh_closest(box_min, box_max, left, right, start, count,
                                       tri_order, tri_a, tri_b, tri_c,
                                       points[i, 0], points[i, 1], points[i, 2])
        out_dist[i] = np.sqrt(d2)
        out_tri[i] = tri


# ---------------------------------------------------------------------------
# generalized winding number
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def winding_number_batch(tri_a, tri_b, tri_c, points, out):
    """Sum of signed solid angles / 4pi (van Oosterom-Strackee)."""
    n_tri = tri_a.shape[0]
    for i in prange(points.shape[0]):
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        total = 0.0
        for t in range(n_tri):
            ax = tri_a[t, 0] - px
            ay = tri_a[t, 1] - py
            az = tri_a[t, 2] - pz
            bx = tri_b[t, 0] - px
            by = tri_b[t, 1] - py
            bz = tri_b[t, 2] - pz
            cx = tri_c[t, 0] - px
            cy = tri_c[t, 1] - py
            cz = tri_c[t, 2] - pz
            la = np.sqrt(ax * ax + ay * ay + az * az)
            lb = np.sqrt(bx * bx + by * by + bz * bz)
            lc = np.sqrt(cx * cx + cy * cy + cz * cz)
            det = (ax * (by * cz - bz * cy)
                   - ay * (bx * cz - bz * cx)
                   + az * (bx * cy - by * cx))
            denom = (la * lb * lc
                     + (ax * bx + ay * by + az * bz) * lc
                     + (bx * cx + by * cy + bz * cz) * la
                     + (cx * ax + cy * ay + cz * az) * lb)
            total += 2.0 * np.arctan2(det, denom)
        out[i] = total / FOUR_PI


@njit(cache=True)
def propagate_sign(sign, dist, h):
    """Flood signs from the winding-evaluated shell to the far field.

    sign: flat (grid-shaped) int8 array, 0 = unknown; dist: unsigned
    distances. A segment between 6-neighbors cannot cross the surface when
    the known endpoint is farther than one voxel step from it (the distance
    field is 1-Lipschitz), so neighbors of such nodes inherit its sign.
    """
    nx, ny, nz = sign.shape
    queue = np.empty(nx * ny * nz, dtype=np.int64)
    head = 0
    tail = 0
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                if sign[i, j, k] != 0 and dist[i, j, k] > h:
                    queue[tail] = (i * ny + j) * nz + k
                    tail += 1
    while head < tail:
        code = queue[head]
        head += 1
        k = code % nz
        j = (code // nz) % ny
        i = code // (ny * nz)
        s = sign[i, j, k]
        for d in range(6):
            ii, jj, kk = i, j, k
            if d == 0:
                ii += 1
            elif d == 1:
                ii -= 1
            elif d == 2:
                jj += 1
            elif d == 3:
                jj -= 1
            elif d == 4:
                kk += 1
            else:
                kk -= 1
            if ii < 0 or jj < 0 or kk < 0 or ii >= nx or jj >= ny or kk >= nz:
                continue
            if sign[ii, jj, kk] == 0:
                sign[ii, jj, kk] = s
                if dist[ii, jj, kk] > h:
                    queue[tail] = (ii * ny + jj) * nz + kk
                    tail += 1


# ---------------------------------------------------------------------------
# trilinear grid sampling (shared by sdf, medial march, contact)
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def trilinear(values, nx, ny, nz, fx, fy, fz):
    """Sample at fractional voxel coords (already clamped to the grid)."""
    ix = int(np.floor(fx))
    iy = int(np.floor(fy))
    iz = int(np.floor(fz))
    if ix > nx - 2:
        ix = nx - 2
    if iy > ny - 2:
        iy = ny - 2
    if iz > nz - 2:
        iz = nz - 2
    if ix < 0:
        ix = 0
    if iy < 0:
        iy = 0
    if iz < 0:
        iz = 0
    tx = fx - ix
    ty = fy - iy
    tz = fz - iz

    c000 = values[ix, iy, iz]
    c100 = values[ix + 1, iy, iz]
    c010 = values[ix, iy + 1, iz]
    c110 = values[ix + 1, iy + 1, iz]
    c001 = values[ix, iy, iz + 1]
    c101 = values[ix + 1, iy, iz + 1]
    c011 = values[ix, iy + 1, iz + 1]
    c111 = values[ix + 1, iy + 1, iz + 1]

    c00 = c000 * (1 - tx) + c100 * tx
    c10 = c010 * (1 - tx) + c110 * tx
    c01 = c001 * (1 - tx) + c101 * tx
    c11 = c011 * (1 - tx) + c111 * tx
    c0 = c00 * (1 - ty) + c10 * ty
    c1 = c01 * (1 - ty) + c11 * ty
    return c0 * (1 - tz) + c1 * tz


@njit(cache=True, inline="always")
def _clampf(v, lo, hi):
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


@njit(cache=True)
def grid_sample(values, origin, spacing, px, py, pz):
    nx, ny, nz = values.shape
    fx = _clampf((px - origin[0]) / spacing[0], 0.0, nx - 1.0)
    fy = _clampf((py - origin[1]) / spacing[1], 0.0, ny - 1.0)
    fz = _clampf((pz - origin[2]) / spacing[2], 0.0, nz - 1.0)
    return trilinear(values, nx, ny, nz, fx, fy, fz)


@njit(cache=True)
def grid_gradient(values, origin, spacing, px, py, pz):
    """Central differences of the trilinear field, step = one voxel."""
    gx = (grid_sample(values, origin, spacing, px + spacing[0], py, pz)
          - grid_sample(values, origin, spacing, px - spacing[0], py, pz)) / (2.0 * spacing[0])
    gy = (grid_sample(values, origin, spacing, px, py + spacing[1], pz)
          - grid_sample(values, origin, spacing, px, py - spacing[1], pz)) / (2.0 * spacing[1])
    gz = (grid_sample(values, origin, spacing, px, py, pz + spacing[2])
          - grid_sample(values, origin, spacing, px, py, pz - spacing[2])) / (2.0 * spacing[2])
    return gx, gy, gz


@njit(cache=True)
def grid_second_derivative(values, origin, spacing, px, py, pz, dx, dy, dz):
    h = min(spacing[0], min(spacing[1], spacing[2]))
    f0 = grid_sample(values, origin, spacing, px, py, pz)
    fp = grid_sample(values, origin, spacing, px + h * dx, py + h * dy, pz + h * dz)
    fm = grid_sample(values, origin, spacing, px - h * dx, py - h * dy, pz - h * dz)
    return (fp - 2.0 * f0 + fm) / (h * h)
