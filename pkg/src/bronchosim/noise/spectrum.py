"""Frequency-domain sensor-noise identification and synthesis.

Identification: noise = image - bilateral(image); the power spectral
density is the mean squared FFT magnitude over source images (DC at
index [0, 0], numpy convention). Synthesis shapes unit white Gaussian
noise by sqrt(P) and renormalizes to unit variance so the amplitude
knob beta keeps a stable meaning across spectra.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .bilateral import bilateral_filter


@dataclass
class NoiseSpectrum:
    power: np.ndarray       # (H, W) PSD, DC at [0, 0]
    source_count: int = 0

    def __post_init__(self):
        self.power = np.asarray(self.power, dtype=np.float64)
        if self.power.ndim != 2:
            raise ValueError("PSD must be 2D")
        if np.any(self.power < 0):
            raise ValueError("PSD must be nonnegative")

    @property
    def height(self) -> int:
        return self.power.shape[0]

    @property
    def width(self) -> int:
        return self.power.shape[1]

    def resampled(self, height: int, width: int) -> "NoiseSpectrum":
        """Bilinear resample in the centered frequency domain."""
        if (height, width) == self.power.shape:
            return self
        centered = np.fft.fftshift(self.power)
        zoomed = ndimage.zoom(centered, (height / self.height, width / self.width),
                              order=1, mode="nearest", grid_mode=True)
        zoomed = np.maximum(zoomed, 0.0)
        return NoiseSpectrum(np.fft.ifftshift(zoomed), self.source_count)

    # -- archive: JSON header + raw little-endian float32 ------------------

    def save(self, path) -> None:
        path = Path(path)
        self.power.astype("<f4").tofile(path)
        header = {"height": self.height, "width": self.width,
                  "source_count": self.source_count,
                  "dtype": "float32-le", "dc": "index-origin"}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(header, indent=2))

    @classmethod
    def load(cls, path) -> "NoiseSpectrum":
        path = Path(path)
        header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        flat = np.fromfile(path, dtype="<f4")
        shape = (int(header["height"]), int(header["width"]))
        if flat.size != shape[0] * shape[1]:
            raise ValueError(f"{path}: PSD size mismatch with header")
        return cls(flat.reshape(shape).astype(np.float64),
                   int(header.get("source_count", 0)))


@dataclass
class NoiseParams:
    beta: float = 0.03
    per_channel: bool = False   # independent spectra per channel vs shared

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")


def estimate_psd(real_images, sigma_spatial: float = 3.0,
                 sigma_range: float = 0.05,
                 radial_smooth: float = 0.0) -> NoiseSpectrum:
    """PSD of the bilateral-filter residual, averaged over images."""
    if len(real_images) == 0:
        raise ValueError("need at least one image")
    shape = np.asarray(real_images[0]).shape
    acc = np.zeros(shape[:2])
    for img in real_images:
        img = np.asarray(img, dtype=np.float64)
        if img.shape != shape:
            raise ValueError("all images must share the same size")
        if img.ndim == 3:
            img = img.mean(axis=2)  # luma-shared estimate
        noise = img - bilateral_filter(img, sigma_spatial, sigma_range)
        acc += np.abs(np.fft.fft2(noise)) ** 2
    power = acc / len(real_images)
    if radial_smooth > 0:
        power = np.fft.ifftshift(
            ndimage.gaussian_filter(np.fft.fftshift(power), radial_smooth))
    return NoiseSpectrum(power, source_count=len(real_images))


def synthesize_noise(spec: NoiseSpectrum, seed: int, size=None) -> np.ndarray:
    """Spectrum-shaped unit-variance noise field (deterministic per seed)."""
    if size is None:
        size = (spec.height, spec.width)
    h, w = int(size[0]), int(size[1])
    spec = spec.resampled(h, w)
    rng = np.random.Generator(np.random.Philox(key=seed))
    white = rng.standard_normal((h, w))
    shaped = np.fft.ifft2(np.fft.fft2(white) * np.sqrt(spec.power)).real
    std = shaped.std()
    if std < 1e-30:
        return np.zeros((h, w))
    return (shaped - shaped.mean()) / std


def inject_noise(rgb, spec, params: NoiseParams, seed: int) -> np.ndarray:
    """Add beta-scaled shaped noise in linear intensity, clamped to [0, 1].

    Accepts a linear float image (H,W) or (H,W,3). beta = 0 returns the
    input untouched. Channels always get independent white draws; with
    params.per_channel True, `spec` must be a sequence of three spectra
    (one per channel) instead of one shared spectrum.
    """
    rgb = np.asarray(rgb)
    if params.beta == 0.0:
        return rgb
    if params.per_channel:
        if isinstance(spec, NoiseSpectrum) or len(spec) != 3:
            raise ValueError("per_channel injection needs three spectra")
        spectra = list(spec)
    else:
        spectra = [spec] * 3
    out = rgb.astype(np.float64, copy=True)
    if out.ndim == 2:
        out += params.beta * synthesize_noise(spectra[0], seed, out.shape)
    else:
        for c in range(out.shape[2]):
            n = synthesize_noise(spectra[c], seed * 3 + c, out.shape[:2])
            out[..., c] += params.beta * n
    return np.clip(out, 0.0, 1.0)


def radial_average(power: np.ndarray, n_bins: int = 32):
    """Mean PSD per radial frequency bin; returns (freq, mean) arrays.

    Frequencies are in cycles/pixel; DC is excluded from bin 0.
    """
    h, w = power.shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    r = np.hypot(fy, fx)
    bins = np.linspace(0.0, 0.5, n_bins + 1)
    idx = np.digitize(r.ravel(), bins) - 1
    p = power.ravel()
    freq = np.empty(n_bins)
    mean = np.empty(n_bins)
    for b in range(n_bins):
        sel = (idx == b) & (r.ravel() > 0)
        freq[b] = 0.5 * (bins[b] + bins[b + 1])
        mean[b] = p[sel].mean() if sel.any() else np.nan
    return freq, mean
