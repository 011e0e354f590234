"""Shared domain types, complex-plane arithmetic and seeded RNG.

Conventions used throughout the package:

* a complex image is a ``complex128`` ndarray of shape ``(H, W)``; its real
  and imaginary planes are the two real degrees of freedom per pixel,
* a multi-field (stacked analysis coefficients ``z = (z^1, ..., z^M)``) is a
  ``complex128`` ndarray of shape ``(M, H, W)``,
* all inner products are the *real* inner product
  ``<a, b> = sum(Re a * Re b + Im a * Im b)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "ParamVector",
    "Rng",
    "as_image",
    "as_multifield",
    "cgauss_sample",
    "inner_real",
    "norm2",
    "pixel_abs",
]


def as_image(a):
    """Validate and return a 2-D complex image array."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a 2-D image, got shape {a.shape}")
    return a


def as_multifield(z):
    """Validate and return a (M, H, W) complex multi-field array."""
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim != 3 or z.shape[0] < 1:
        raise DimensionError(f"expected a (M, H, W) multi-field, got shape {z.shape}")
    return z


def inner_real(a, b):
    """Real inner product of two complex arrays of identical shape."""
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(a.real * b.real + a.imag * b.imag))


def norm2(a):
    """Euclidean norm induced by :func:`inner_real`."""
    return float(np.sqrt(np.sum(a.real ** 2 + a.imag ** 2)))


@dataclass(frozen=True)
class ParamVector:
    """Upper-level variable: per-frequency pattern weights in [0,1] plus alpha >= 0.

    ``weights`` lives on the k-space grid (same shape as the image, DC at
    index ``[0, 0]`` following the unshifted FFT layout).
    """

    weights: np.ndarray
    alpha: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise DimensionError(f"weights must be 2-D, got shape {w.shape}")
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise DomainError("pattern weights must lie in [0, 1]")
        if not self.alpha >= 0.0:
            raise DomainError("alpha must be nonnegative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n(self):
        return self.weights.size

    def to_vec(self):
        """Flatten to the length n+1 parameter vector (weights then alpha)."""
        return np.concatenate([self.weights.ravel(), [self.alpha]])

    @staticmethod
    def from_vec(vec, shape):
        vec = np.asarray(vec, dtype=np.float64)
        n = shape[0] * shape[1]
        if vec.shape != (n + 1,):
            raise DimensionError(f"expected length {n + 1} vector, got {vec.shape}")
        return ParamVector(vec[:n].reshape(shape), float(vec[n]))

    @property
    def sampling_fraction(self):
        return float(np.mean(self.weights))


class Rng:
    """Deterministic splittable RNG.

    Wraps a counter-based Philox bit generator; distinct purposes get
    independent streams via labeled sub-seeding so results do not depend on
    evaluation order or thread count.
    """

    def __init__(self, seed, _key=()):
        self.seed = int(seed)
        self._key = tuple(_key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self._key)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def substream(self, *labels):
        """Derive an independent child stream identified by integer labels."""
        key = self._key + tuple(int(l) & 0xFFFFFFFF for l in labels)
        return Rng(self.seed, _key=key)

    def generator(self):
        return self._gen

    # thin pass-throughs used across the package
    def normal(self, size):
        return self._gen.standard_normal(size)

    def uniform(self, size=None):
        return self._gen.random(size)

    def choice(self, n, size, replace=False, p=None):
        return self._gen.choice(n, size=size, replace=replace, p=p)


def cgauss_sample(rng, shape, sigma):
    """Complex Gaussian white noise: each pixel has independent N(0, sigma^2)
    real and imaginary parts. Deterministic given (rng stream, shape, sigma)."""
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    h, w = int(shape[0]), int(shape[1])
    if h < 1 or w < 1:
        raise DimensionError(f"nonpositive dimensions: {shape}")
    if sigma == 0.0:
        return np.zeros((h, w), dtype=np.complex128)
    re = rng.normal((h, w))
    im = rng.normal((h, w))
    return sigma * (re + 1j * im)


def pixel_abs(z):
    """Per-pixel magnitude of a multi-field:
    ``sqrt(sum_p |z^p|^2)`` over components and real/imag parts."""
    z = as_multifield(z)
    return np.sqrt(np.sum(z.real ** 2 + z.imag ** 2, axis=0))
