"""Image quality metrics: windowed SSIM and PSNR, plus the aggregate rows
used by the evaluation tooling. Complex inputs are compared by magnitude."""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

from .errors import DimensionError

__all__ = ["MetricsRow", "aggregate", "psnr", "ssim"]

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _magnitude(u):
    u = np.asarray(u)
    return np.abs(u).astype(np.float64) if np.iscomplexobj(u) else u.astype(np.float64)


def _gaussian_window(size, sigma):
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(u, u_ref):
    """Gaussian-windowed SSIM (11x11 window, sigma 1.5), mean over the valid
    (fully overlapping) window positions. Dynamic range is the maximum of the
    reference."""
    a = _magnitude(u)
    b = _magnitude(u_ref)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    L = float(b.max())
    c1 = (SSIM_K1 * L) ** 2
    c2 = (SSIM_K2 * L) ** 2
    win = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)

    def filt(x):
        return convolve2d(x, win, mode="valid")

    mu_a = filt(a)
    mu_b = filt(b)
    var_a = filt(a * a) - mu_a ** 2
    var_b = filt(b * b) - mu_b ** 2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def psnr(u, u_ref):
    """Peak signal-to-noise ratio in dB, peak = max |u_ref|; +inf for
    identical inputs."""
    a = _magnitude(u)
    b = _magnitude(u_ref)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    L = float(b.max())
    return float(10.0 * np.log10(L ** 2 / mse))


@dataclass
class MetricsRow:
    """Per-pattern metrics over a set of images with mean +/- standard error."""

    pattern_id: str
    sampling_fraction: float
    ssim_values: list = field(default_factory=list)
    psnr_values: list = field(default_factory=list)

    @property
    def ssim_mean(self):
        return float(np.mean(self.ssim_values))

    @property
    def ssim_stderr(self):
        return _stderr(self.ssim_values)

    @property
    def psnr_mean(self):
        return float(np.mean(self.psnr_values))

    @property
    def psnr_stderr(self):
        return _stderr(self.psnr_values)


def _stderr(vals):
    vals = np.asarray(vals, dtype=np.float64)
    if vals.size < 2:
        return 0.0
    return float(np.std(vals, ddof=1) / np.sqrt(vals.size))


def aggregate(vals):
    """Sample mean and standard error s/sqrt(N)."""
    vals = np.asarray(vals, dtype=np.float64)
    return float(np.mean(vals)), _stderr(vals)
