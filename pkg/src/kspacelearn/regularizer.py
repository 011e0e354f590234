"""The smoothed sparsity penalty J(v) = sum_i rho(|v|_i) with its gradient,
Hessian action, smoothness constant and proximal map.

Three choices of the scalar profile rho are supported:

* ``huber``: the twice continuously differentiable Huber-type function
  rho(x) = -x^3/(3 gamma^2) + x^2/gamma for x <= gamma, x - gamma/3 beyond,
* ``quadratic``: rho(x) = x^2/2 (squared seminorm regularization),
* ``zero``: rho = 0 (no regularization).
"""

from dataclasses import dataclass

import numpy as np

from .core import as_multifield, pixel_abs
from .errors import DimensionError, DomainError

__all__ = [
    "RhoSpec",
    "J_eval",
    "J_grad",
    "J_hess_apply",
    "phi",
    "prox_F2",
    "psi",
    "rho",
    "rho_prime",
    "smoothness_bound",
]


@dataclass(frozen=True)
class RhoSpec:
    kind: str  # "huber" | "quadratic" | "zero"
    gamma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("huber", "quadratic", "zero"):
            raise DomainError(f"unknown rho kind {self.kind!r}")
        if self.kind == "huber" and not self.gamma > 0.0:
            raise DomainError("huber profile requires gamma > 0")


def _check_nonneg(x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise DomainError("rho and friends are defined on [0, inf)")
    return x


def rho(spec, x):
    """Scalar profile rho evaluated elementwise on x >= 0."""
    x = _check_nonneg(x)
    if spec.kind == "zero":
        return np.zeros_like(x)
    if spec.kind == "quadratic":
        return x ** 2 / 2.0
    g = spec.gamma
    return np.where(x <= g, -x ** 3 / (3.0 * g ** 2) + x ** 2 / g, x - g / 3.0)


def rho_prime(spec, x):
    """Derivative of rho; continuous, equals 1 at x = gamma for huber."""
    x = _check_nonneg(x)
    if spec.kind == "zero":
        return np.zeros_like(x)
    if spec.kind == "quadratic":
        return x.copy()
    g = spec.gamma
    return np.where(x <= g, -x ** 2 / g ** 2 + 2.0 * x / g, 1.0)


def phi(spec, x):
    """phi(x) = rho'(x)/x, continuously extended at 0."""
    x = _check_nonneg(x)
    if spec.kind == "zero":
        return np.zeros_like(x)
    if spec.kind == "quadratic":
        return np.ones_like(x)
    g = spec.gamma
    return np.where(x <= g, 2.0 / g - x / g ** 2, 1.0 / np.maximum(x, g))


def psi(spec, x):
    """psi(x) = phi'(x)/x for x > 0 and psi(0) = 0."""
    x = _check_nonneg(x)
    if spec.kind in ("zero", "quadratic"):
        return np.zeros_like(x)
    g = spec.gamma
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = np.where(xp <= g, -1.0 / (g ** 2 * xp), -1.0 / xp ** 3)
    return out


def J_eval(spec, z):
    """J(z) = sum_i rho(|z|_i) over pixels."""
    if spec.kind == "zero":
        return 0.0
    return float(np.sum(rho(spec, pixel_abs(z))))


def J_grad(spec, z):
    """DJ(z) = phi(|z|) . z, applied per component and per real/imag part."""
    z = as_multifield(z)
    if spec.kind == "zero":
        return np.zeros_like(z)
    return phi(spec, pixel_abs(z))[None, :, :] * z


def J_hess_apply(spec, z, w):
    """Action of the Hessian of J at z on w:
    psi(|z|) . z . (sum_{p,comp} z^p_comp w^p_comp) + phi(|z|) . w."""
    z = as_multifield(z)
    w = as_multifield(w)
    if z.shape != w.shape:
        raise DimensionError(f"shape mismatch: {z.shape} vs {w.shape}")
    if spec.kind == "zero":
        return np.zeros_like(w)
    a = pixel_abs(z)
    cross = np.sum(z.real * w.real + z.imag * w.imag, axis=0)
    return (psi(spec, a) * cross)[None, :, :] * z + phi(spec, a)[None, :, :] * w


def smoothness_bound(spec, M):
    """Upper bound L on ||D^2 J|| for M components:
    L = sqrt(2) M^{3/2} sup(|phi'(x)| x) + sup |phi(x)|,
    with the suprema in closed form per profile."""
    if M < 1:
        raise DomainError("M must be >= 1")
    if spec.kind == "zero":
        sup_phip_x, sup_phi = 0.0, 0.0
    elif spec.kind == "quadratic":
        sup_phip_x, sup_phi = 0.0, 1.0
    else:
        # |phi'(x)| x = x/gamma^2 on (0, gamma], 1/x beyond: both peak at 1/gamma
        sup_phip_x, sup_phi = 1.0 / spec.gamma, 2.0 / spec.gamma
    return float(np.sqrt(2.0) * M ** 1.5 * sup_phip_x + sup_phi)


def _prox_magnitude(spec, a, t):
    """Solve (1 + t phi(C)) C = a for C >= 0, elementwise on magnitudes a."""
    if spec.kind == "zero" or t == 0.0:
        return a.copy()
    if spec.kind == "quadratic":
        return a / (1.0 + t)
    g = spec.gamma
    # smooth branch valid iff the solution C <= gamma, i.e. a <= gamma + t
    b = 1.0 + 2.0 * t / g
    disc = np.maximum(b ** 2 - 4.0 * t * a / g ** 2, 0.0)
    smooth = 2.0 * a / (b + np.sqrt(disc))
    return np.where(a <= g + t, smooth, a - t)


def prox_F2(spec, z, t):
    """Proximal map of t * J applied pixelwise: rescales each pixel's
    magnitude to the solution C of (1 + t phi(C)) C = |z|."""
    z = as_multifield(z)
    if t < 0:
        raise DomainError("prox step must be nonnegative")
    if spec.kind == "zero" or t == 0.0:
        return z.copy()
    a = pixel_abs(z)
    c = _prox_magnitude(spec, a, t)
    scale = np.ones_like(a)
    pos = a > 0
    scale[pos] = c[pos] / a[pos]
    return scale[None, :, :] * z
