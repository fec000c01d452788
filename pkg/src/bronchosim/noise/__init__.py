from .bilateral import bilateral_filter
from .spectrum import (NoiseSpectrum, NoiseParams, estimate_psd,
                       synthesize_noise, inject_noise, radial_average)

__all__ = [
    "bilateral_filter",
    "NoiseSpectrum", "NoiseParams", "estimate_psd", "synthesize_noise",
    "inject_noise", "radial_average",
]
