"""Numba ray-tracing kernel: depth, camera-frame normals, linear RGB."""

import numpy as np
from numba import njit, prange

from ..geometry.kernels import bvh_raycast

INF = np.inf


# hashing runs in masked int64 space: numba promotes mixed uint32 math to
# int64 anyway, so the 32-bit wrap is made explicit

@njit(cache=True, inline="always")
def _hash_u32(x):
    x = x & 0xFFFFFFFF
    x = ((x ^ 61) ^ (x >> 16)) & 0xFFFFFFFF
    x = (x + (x << 3)) & 0xFFFFFFFF
    x = x ^ (x >> 4)
    x = (x * 0x27d4eb2d) & 0xFFFFFFFF
    x = x ^ (x >> 15)
    return x


@njit(cache=True, inline="always")
def _rand01(a, b, c):
    h = _hash_u32(a ^ 0x9E3779B1)
    h = _hash_u32(h ^ (b & 0xFFFFFFFF))
    h = _hash_u32(h ^ (c & 0xFFFFFFFF))
    return h / 4294967296.0


@njit(cache=True, inline="always")
def _lattice(ix, iy, iz, seed):
    h = (ix * 73856093) ^ (iy * 19349663) ^ (iz * 83492791)
    h = _hash_u32(h ^ ((seed & 0x7FFFFFFF) * 2654435761))
    return h / 4294967296.0


@njit(cache=True, inline="always")
def value_noise(x, y, z, scale, seed):
    fx = x / scale
    fy = y / scale
    fz = z / scale
    ix = int(np.floor(fx))
    iy = int(np.floor(fy))
    iz = int(np.floor(fz))
    tx = fx - ix
    ty = fy - iy
    tz = fz - iz
    # smoothstep fade
    tx = tx * tx * (3.0 - 2.0 * tx)
    ty = ty * ty * (3.0 - 2.0 * ty)
    tz = tz * tz * (3.0 - 2.0 * tz)
    c000 = _lattice(ix, iy, iz, seed)
    c100 = _lattice(ix + 1, iy, iz, seed)
    c010 = _lattice(ix, iy + 1, iz, seed)
    c110 = _lattice(ix + 1, iy + 1, iz, seed)
    c001 = _lattice(ix, iy, iz + 1, seed)
    c101 = _lattice(ix + 1, iy, iz + 1, seed)
    c011 = _lattice(ix, iy + 1, iz + 1, seed)
    c111 = _lattice(ix + 1, iy + 1, iz + 1, seed)
    c00 = c000 * (1 - tx) + c100 * tx
    c10 = c010 * (1 - tx) + c110 * tx
    c01 = c001 * (1 - tx) + c101 * tx
    c11 = c011 * (1 - tx) + c111 * tx
    c0 = c00 * (1 - ty) + c10 * ty
    c1 = c01 * (1 - ty) + c11 * ty
    return c0 * (1 - tz) + c1 * tz


@njit(cache=True, parallel=True)
def render_passes(box_min, box_max, left, right, start, count, tri_order,
                  v0, e1, e2, triangles, vertex_normals,
                  width, height, fx, fy, cx, cy,
                  cam_R, cam_t,
                  light_pos, light_i0, light_alpha,
                  base_r, base_g, base_b, roughness0, metallic, spec_weight,
                  tex_on, tex_scale, tex_color_amp, tex_rough_amp, tex_seed,
                  ambient, spp, jitter_seed, shade,
                  depth, normals, rgb):
    """Fill depth (z-depth), camera-frame normals and linear rgb in place."""
    for py in prange(height):
        for px in range(width):
            # center ray: depth + normal pass (independent of spp)
            ddx = (px - cx) / fx
            ddy = (py - cy) / fy
            inv_len = 1.0 / np.sqrt(ddx * ddx + ddy * ddy + 1.0)
            cdx = ddx * inv_len
            cdy = ddy * inv_len
            cdz = inv_len
            wx = cam_R[0, 0] * cdx + cam_R[0, 1] * cdy + cam_R[0, 2] * cdz
            wy = cam_R[1, 0] * cdx + cam_R[1, 1] * cdy + cam_R[1, 2] * cdz
            wz = cam_R[2, 0] * cdx + cam_R[2, 1] * cdy + cam_R[2, 2] * cdz
            t, tri, bu, bv = bvh_raycast(box_min, box_max, left, right, start,
                                         count, tri_order, v0, e1, e2,
                                         cam_t[0], cam_t[1], cam_t[2],
                                         wx, wy, wz, 1e-6, INF)
            if tri < 0:
                depth[py, px] = INF
                normals[py, px, 0] = 0.0
                normals[py, px, 1] = 0.0
                normals[py, px, 2] = 0.0
            else:
                depth[py, px] = t * cdz
                ia = triangles[tri, 0]
                ib = triangles[tri, 1]
                ic = triangles[tri, 2]
                w0 = 1.0 - bu - bv
                nx = (w0 * vertex_normals[ia, 0] + bu * vertex_normals[ib, 0]
                      + bv * vertex_normals[ic, 0])
                ny = (w0 * vertex_normals[ia, 1] + bu * vertex_normals[ib, 1]
                      + bv * vertex_normals[ic, 1])
                nz = (w0 * vertex_normals[ia, 2] + bu * vertex_normals[ib, 2]
                      + bv * vertex_normals[ic, 2])
                nn = np.sqrt(nx * nx + ny * ny + nz * nz)
                if nn > 0:
                    nx /= nn
                    ny /= nn
                    nz /= nn
                # face the viewer
                if nx * wx + ny * wy + nz * wz > 0.0:
                    nx, ny, nz = -nx, -ny, -nz
                # to camera frame: n_cam = R^T n_world
                normals[py, px, 0] = cam_R[0, 0] * nx + cam_R[1, 0] * ny + cam_R[2, 0] * nz
                normals[py, px, 1] = cam_R[0, 1] * nx + cam_R[1, 1] * ny + cam_R[2, 1] * nz
                normals[py, px, 2] = cam_R[0, 2] * nx + cam_R[1, 2] * ny + cam_R[2, 2] * nz

            if not shade:
                continue

            acc_r = 0.0
            acc_g = 0.0
            acc_b = 0.0
            pixel_id = py * width + px
            for s in range(spp):
                if spp > 1:
                    ju = _rand01(pixel_id, 2 * s, jitter_seed) - 0.5
                    jv = _rand01(pixel_id, 2 * s + 1, jitter_seed) - 0.5
                else:
                    ju = 0.0
                    jv = 0.0
                sdx = (px + ju - cx) / fx
                sdy = (py + jv - cy) / fy
                s_inv = 1.0 / np.sqrt(sdx * sdx + sdy * sdy + 1.0)
                scx = sdx * s_inv
                scy = sdy * s_inv
                scz = s_inv
                swx = cam_R[0, 0] * scx + cam_R[0, 1] * scy + cam_R[0, 2] * scz
                swy = cam_R[1, 0] * scx + cam_R[1, 1] * scy + cam_R[1, 2] * scz
                swz = cam_R[2, 0] * scx + cam_R[2, 1] * scy + cam_R[2, 2] * scz
                st, stri, sbu, sbv = bvh_raycast(box_min, box_max, left, right,
                                                 start, count, tri_order,
                                                 v0, e1, e2,
                                                 cam_t[0], cam_t[1], cam_t[2],
                                                 swx, swy, swz, 1e-6, INF)
                if stri < 0:
                    continue
                hx = cam_t[0] + st * swx
                hy = cam_t[1] + st * swy
                hz = cam_t[2] + st * swz
                ia = triangles[stri, 0]
                ib = triangles[stri, 1]
                ic = triangles[stri, 2]
                w0 = 1.0 - sbu - sbv
                nx = (w0 * vertex_normals[ia, 0] + sbu * vertex_normals[ib, 0]
                      + sbv * vertex_normals[ic, 0])
                ny = (w0 * vertex_normals[ia, 1] + sbu * vertex_normals[ib, 1]
                      + sbv * vertex_normals[ic, 1])
                nz = (w0 * vertex_normals[ia, 2] + sbu * vertex_normals[ib, 2]
                      + sbv * vertex_normals[ic, 2])
                nn = np.sqrt(nx * nx + ny * ny + nz * nz)
                if nn > 0:
                    nx /= nn
                    ny /= nn
                    nz /= nn
                if nx * swx + ny * swy + nz * swz > 0.0:
                    nx, ny, nz = -nx, -ny, -nz

                alb_r = base_r
                alb_g = base_g
                alb_b = base_b
                rough = roughness0
                if tex_on:
                    n1 = value_noise(hx, hy, hz, tex_scale, tex_seed)
                    n2 = value_noise(hx, hy, hz, 0.37 * tex_scale, tex_seed + 7)
                    mod = 1.0 + tex_color_amp * (1.4 * n1 + 0.6 * n2 - 1.0)
                    alb_r = min(max(alb_r * mod, 0.0), 1.0)
                    alb_g = min(max(alb_g * mod, 0.0), 1.0)
                    alb_b = min(max(alb_b * mod, 0.0), 1.0)
                    rough = min(max(rough * (1.0 + tex_rough_amp * (2.0 * n2 - 1.0)),
                                    0.03), 1.0)

                if ambient > 0.0:
                    acc_r += ambient * alb_r
                    acc_g += ambient * alb_g
                    acc_b += ambient * alb_b

                # light: exponential falloff times inverse square
                lx = light_pos[0] - hx
                ly = light_pos[1] - hy
                lz = light_pos[2] - hz
                dl = np.sqrt(lx * lx + ly * ly + lz * lz)
                if dl < 1e-9:
                    continue
                lx /= dl
                ly /= dl
                lz /= dl
                ndotl = nx * lx + ny * ly + nz * lz
                if ndotl <= 0.0:
                    continue
                atten = light_i0 * np.exp(-light_alpha * dl) / (dl * dl)

                acc_r += alb_r * atten * ndotl
                acc_g += alb_g * atten * ndotl
                acc_b += alb_b * atten * ndotl

                # GGX specular with Schlick Fresnel and Smith visibility
                vx = -swx
                vy = -swy
                vz = -swz
                hxn = vx + lx
                hyn = vy + ly
                hzn = vz + lz
                hn = np.sqrt(hxn * hxn + hyn * hyn + hzn * hzn)
                if hn > 1e-12:
                    hxn /= hn
                    hyn /= hn
                    hzn /= hn
                    ndoth = max(nx * hxn + ny * hyn + nz * hzn, 0.0)
                    ndotv = max(nx * vx + ny * vy + nz * vz, 1e-6)
                    vdoth = max(vx * hxn + vy * hyn + vz * hzn, 0.0)
                    a = rough * rough
                    a2 = a * a
                    denom = ndoth * ndoth * (a2 - 1.0) + 1.0
                    dterm = a2 / (np.pi * denom * denom)
                    kf = a / 2.0
                    g1v = ndotv / (ndotv * (1.0 - kf) + kf)
                    g1l = ndotl / (ndotl * (1.0 - kf) + kf)
                    f0_r = 0.04 * spec_weight * (1.0 - metallic) + metallic * alb_r
                    f0_g = 0.04 * spec_weight * (1.0 - metallic) + metallic * alb_g
                    f0_b = 0.04 * spec_weight * (1.0 - metallic) + metallic * alb_b
                    fres = (1.0 - vdoth) ** 5
                    fr = f0_r + (1.0 - f0_r) * fres
                    fg = f0_g + (1.0 - f0_g) * fres
                    fb = f0_b + (1.0 - f0_b) * fres
                    scale_s = dterm * g1v * g1l / (4.0 * ndotv * ndotl + 1e-9) \
                        * ndotl * atten
                    acc_r += fr * scale_s
                    acc_g += fg * scale_s
                    acc_b += fb * scale_s

            inv_spp = 1.0 / spp
            rgb[py, px, 0] = acc_r * inv_spp
            rgb[py, px, 1] = acc_g * inv_spp
            rgb[py, px, 2] = acc_b * inv_spp
