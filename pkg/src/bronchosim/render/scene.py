"""Materials, tip lighting and render settings."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Material:
    base_color: tuple = (0.78, 0.35, 0.32)   # linear RGB, mucosa-ish
    roughness: float = 0.35
    metallic: float = 0.0
    specular_weight: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.roughness <= 1.0:
            raise ValueError("roughness in [0,1]")
        if not 0.0 <= self.metallic <= 1.0:
            raise ValueError("metallic in [0,1]")
        if self.specular_weight < 0.0:
            raise ValueError("specular weight >= 0")


@dataclass
class TipLight:
    # intensity calibrated so a wall 3-4 mm ahead sits near white without
    # clipping and the lumen vanishes into darkness at ~15 mm
    intensity: float = 3e-5      # radiometric scale
    falloff: float = 20.0        # exponential attenuation (1/m)
    offset: tuple = (0.0, 0.0, 0.0)  # from camera origin, camera frame (m)

    def __post_init__(self):
        if self.intensity <= 0 or self.falloff < 0:
            raise ValueError("light intensity > 0, falloff >= 0")


@dataclass
class SurfaceTexture:
    """Value-noise modulation of albedo and roughness over world position."""

    enabled: bool = False
    scale: float = 1.5e-3        # feature size (m)
    color_amplitude: float = 0.25
    roughness_amplitude: float = 0.2
    seed: int = 0


@dataclass
class RenderSettings:
    spp: int = 4
    exposure: float = 1.0
    tone_map: bool = True        # Reinhard + sRGB encode
    ambient: float = 0.0         # flat ambient term, fraction of base color
    jitter_seed: int = 0
    texture: SurfaceTexture = field(default_factory=SurfaceTexture)


def srgb_encode(linear: np.ndarray) -> np.ndarray:
    linear = np.clip(linear, 0.0, 1.0)
    return np.where(linear <= 0.0031308,
                    12.92 * linear,
                    1.055 * np.power(linear, 1.0 / 2.4) - 0.055)


def srgb_decode(encoded: np.ndarray) -> np.ndarray:
    encoded = np.clip(encoded, 0.0, 1.0)
    return np.where(encoded <= 0.04045,
                    encoded / 12.92,
                    np.power((encoded + 0.055) / 1.055, 2.4))


def tone_map_to_u8(linear_rgb: np.ndarray, exposure: float = 1.0,
                   reinhard: bool = True) -> np.ndarray:
    x = linear_rgb * exposure
    if reinhard:
        x = x / (1.0 + x)
    return np.round(srgb_encode(x) * 255.0).astype(np.uint8)
