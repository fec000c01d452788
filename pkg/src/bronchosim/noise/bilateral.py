"""Edge-preserving bilateral filter (Gaussian spatial x Gaussian range)."""

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def _bilateral2d(img, out, radius, inv2_ss, inv2_sr):
    h, w = img.shape
    for y in prange(h):
        for x in range(w):
            center = img[y, x]
            acc = 0.0
            norm = 0.0
            for dy in range(-radius, radius + 1):
                yy = y + dy
                if yy < 0:
                    yy = 0
                elif yy >= h:
                    yy = h - 1
                for dx in range(-radius, radius + 1):
                    xx = x + dx
                    if xx < 0:
                        xx = 0
                    elif xx >= w:
                        xx = w - 1
                    val = img[yy, xx]
                    d = val - center
                    wgt = np.exp(-(dx * dx + dy * dy) * inv2_ss
                                 - d * d * inv2_sr)
                    acc += wgt * val
                    norm += wgt
            out[y, x] = acc / norm


def bilateral_filter(img: np.ndarray, sigma_spatial: float = 3.0,
                     sigma_range: float = 0.05) -> np.ndarray:
    """Filter a float image; 3D inputs are filtered channel by channel.

    Borders are handled by edge clamping; the window is truncated at
    3 * sigma_spatial.
    """
    if sigma_spatial <= 0 or sigma_range <= 0:
        raise ValueError("sigmas must be positive")
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3:
        out = np.empty_like(img)
        for c in range(img.shape[2]):
            out[..., c] = bilateral_filter(img[..., c], sigma_spatial, sigma_range)
        return out
    radius = int(np.ceil(3.0 * sigma_spatial))
    out = np.empty_like(img)
    _bilateral2d(np.ascontiguousarray(img), out, radius,
                 0.5 / (sigma_spatial * sigma_spatial),
                 0.5 / (sigma_range * sigma_range))
    return out
