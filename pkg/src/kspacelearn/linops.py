"""Linear operators: unitary 2-D Fourier transform, discrete gradient and an
orthonormal Daubechies-4 wavelet transform, together with adjoints and
operator-norm bounds."""

from dataclasses import dataclass, field

import numpy as np

from .core import as_image, as_multifield, cgauss_sample, norm2
from .errors import DimensionError

__all__ = [
    "AnalysisOp",
    "dft2",
    "dwt2",
    "grad_adjoint",
    "grad_apply",
    "gradient_op",
    "identity_op",
    "idft2",
    "idwt2",
    "power_norm",
    "wavelet_op",
]


# ---------------------------------------------------------------------------
# Fourier transform (unitary normalization, 1/sqrt(N) both ways)

def dft2(u):
    """Unitary 2-D DFT; DC ends up at index [0, 0]."""
    return np.fft.fft2(as_image(u), norm="ortho")


def idft2(y):
    """Inverse of :func:`dft2`."""
    return np.fft.ifft2(as_image(y), norm="ortho")


# ---------------------------------------------------------------------------
# Discrete gradient: forward differences, Neumann (replicate) boundary

def grad_apply(u):
    """Forward-difference gradient; component 0 differences along rows
    (vertical), component 1 along columns. The last row/column difference
    is zero (Neumann boundary)."""
    u = as_image(u)
    out = np.zeros((2,) + u.shape, dtype=np.complex128)
    out[0, :-1, :] = u[1:, :] - u[:-1, :]
    out[1, :, :-1] = u[:, 1:] - u[:, :-1]
    return out


def grad_adjoint(z):
    """Exact adjoint of :func:`grad_apply` (negative discrete divergence).

    The last row of component 0 and the last column of component 1 are
    structurally zero in the range of ``grad_apply`` and are ignored here,
    which is what makes the adjoint identity exact for arbitrary inputs.
    """
    z = as_multifield(z)
    if z.shape[0] != 2:
        raise DimensionError(f"gradient adjoint expects M=2, got M={z.shape[0]}")
    out = np.zeros(z.shape[1:], dtype=np.complex128)
    out[:-1, :] -= z[0, :-1, :]
    out[1:, :] += z[0, :-1, :]
    out[:, :-1] -= z[1, :, :-1]
    out[:, 1:] += z[1, :, :-1]
    return out


# ---------------------------------------------------------------------------
# Daubechies-4 wavelet transform, periodic boundary, standard Mallat layout

_SQRT3 = np.sqrt(3.0)
_D4_LO = np.array([1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3]) / (4.0 * np.sqrt(2.0))
_D4_HI = np.array([_D4_LO[3], -_D4_LO[2], _D4_LO[1], -_D4_LO[0]])


def _dwt1(x, axis):
    """One analysis level along ``axis`` with periodic wrap; returns (lo, hi),
    each of half length."""
    x = np.moveaxis(x, axis, 0)
    n = x.shape[0]
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(4)[None, :]) % n
    taps = x[idx]  # (n//2, 4, ...)
    lo = np.tensordot(taps, _D4_LO, axes=([1], [0]))
    hi = np.tensordot(taps, _D4_HI, axes=([1], [0]))
    return np.moveaxis(lo, 0, axis), np.moveaxis(hi, 0, axis)


def _idwt1(lo, hi, axis):
    """Transpose of :func:`_dwt1` (exact inverse by orthonormality)."""
    lo = np.moveaxis(lo, axis, 0)
    hi = np.moveaxis(hi, axis, 0)
    m = lo.shape[0]
    n = 2 * m
    out = np.zeros((n,) + lo.shape[1:], dtype=lo.dtype)
    for t in range(4):
        pos = (2 * np.arange(m) + t) % n
        np.add.at(out, pos, _D4_LO[t] * lo + _D4_HI[t] * hi)
    return np.moveaxis(out, 0, axis)


def _check_divisible(shape, levels):
    if levels < 1:
        raise DimensionError("levels must be >= 1")
    h, w = shape
    d = 2 ** levels
    if h % d != 0 or w % d != 0:
        raise DimensionError(
            f"image shape {shape} not divisible by 2^levels = {d}")


def dwt2(u, levels):
    """Orthonormal 2-D DB4 transform of a complex image, ``levels`` Mallat
    levels, packed in the standard quadrant layout as a single-component
    multi-field (M=1)."""
    u = as_image(u)
    _check_divisible(u.shape, levels)
    out = u.astype(np.complex128, copy=True)
    h, w = u.shape
    for _ in range(levels):
        band = out[:h, :w]
        lo, hi = _dwt1(band, axis=0)
        ll, hl = _dwt1(lo, axis=1)
        lh, hh = _dwt1(hi, axis=1)
        band[: h // 2, : w // 2] = ll
        band[: h // 2, w // 2:] = hl
        band[h // 2:, : w // 2] = lh
        band[h // 2:, w // 2:] = hh
        h //= 2
        w //= 2
    return out[None, :, :]


def idwt2(z, levels):
    """Inverse of :func:`dwt2`."""
    z = as_multifield(z)
    if z.shape[0] != 1:
        raise DimensionError(f"wavelet adjoint expects M=1, got M={z.shape[0]}")
    u = z[0].astype(np.complex128, copy=True)
    _check_divisible(u.shape, levels)
    sizes = [(u.shape[0] >> k, u.shape[1] >> k) for k in range(levels, 0, -1)]
    for h2, w2 in sizes:
        h, w = 2 * h2, 2 * w2
        ll = u[:h2, :w2]
        hl = u[:h2, w2:w]
        lh = u[h2:h, :w2]
        hh = u[h2:h, w2:w]
        lo = _idwt1(ll, hl, axis=1)
        hi = _idwt1(lh, hh, axis=1)
        u[:h, :w] = _idwt1(lo, hi, axis=0)
    return u


# ---------------------------------------------------------------------------
# Analysis operator abstraction

@dataclass(frozen=True)
class AnalysisOp:
    """The analysis operator A = (A_1, ..., A_M) of the regularizer.

    ``apply`` maps an image to an (M, H, W) multi-field; ``adjoint`` is its
    exact adjoint under the real inner product. ``norm_bound`` is a proven
    upper bound on the operator norm.
    """

    kind: str
    M: int
    norm_bound: float
    levels: int = 0

    def apply(self, u):
        if self.kind == "gradient":
            return grad_apply(u)
        if self.kind == "wavelet":
            return dwt2(u, self.levels)
        if self.kind == "identity":
            return as_image(u)[None, :, :]
        raise ValueError(f"unknown analysis operator kind {self.kind!r}")

    def adjoint(self, z):
        if self.kind == "gradient":
            return grad_adjoint(z)
        if self.kind == "wavelet":
            return idwt2(z, self.levels)
        if self.kind == "identity":
            z = as_multifield(z)
            if z.shape[0] != 1:
                raise DimensionError("identity adjoint expects M=1")
            return z[0].copy()
        raise ValueError(f"unknown analysis operator kind {self.kind!r}")


def gradient_op():
    return AnalysisOp(kind="gradient", M=2, norm_bound=np.sqrt(8.0))


def wavelet_op(levels=2):
    if levels < 1:
        raise DimensionError("levels must be >= 1")
    return AnalysisOp(kind="wavelet", M=1, norm_bound=1.0, levels=levels)


def identity_op():
    return AnalysisOp(kind="identity", M=1, norm_bound=1.0)


# ---------------------------------------------------------------------------
# Power iteration for operator-norm estimates

def power_norm(apply_fn, adjoint_fn, shape, iters, rng):
    """Estimate ||A|| by power iteration on A*A starting from complex
    Gaussian noise. The Rayleigh estimate is nondecreasing in ``iters``."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    h, w = int(shape[0]), int(shape[1])
    if h < 1 or w < 1:
        raise DimensionError(f"zero-dimensional input: {shape}")
    x = cgauss_sample(rng, (h, w), 1.0)
    est = 0.0
    for _ in range(iters):
        y = adjoint_fn(apply_fn(x))
        nx = norm2(x)
        if nx == 0.0:
            return 0.0
        # Rayleigh quotient of A*A
        est = np.sqrt(max(np.sum((y * x.conj()).real), 0.0)) / nx
        ny = norm2(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
    return float(est)
