"""Baseline sampling-pattern generators, the greedy line-selection
comparison method, and kernel density estimates of learned patterns."""

import numpy as np
from scipy.signal import convolve2d

from .core import ParamVector
from .errors import ConfigError, DegeneratePatternError, DomainError
from .lower_level import LowerLevelProblem, solve
from .metrics import ssim
from .upper_level import retune_alpha

__all__ = ["baseline_pattern", "greedy_lines", "kde_pattern", "kspace_radius"]


def kspace_radius(shape):
    """Distance of every grid point to DC, in the unshifted FFT layout."""
    h, w = shape
    ky = np.fft.fftfreq(h) * h
    kx = np.fft.fftfreq(w) * w
    return np.sqrt(ky[:, None] ** 2 + kx[None, :] ** 2)


def _density(radius, decay):
    r_max = float(radius.max())
    return (1.0 + radius / r_max) ** (-decay)


def baseline_pattern(kind, shape, rng, rate, decay=4.0, axis="vertical"):
    """Binary baseline pattern with exactly round(rate * n) active samples
    (or round(rate * n_lines) active lines for ``random-lines``). Alpha is
    left at 0 for the caller to tune.

    kinds: ``uniform-random``, ``variable-density``, ``low-pass``,
    ``random-lines``.
    """
    if not 0.0 < rate <= 1.0:
        raise DomainError("rate must lie in (0, 1]")
    h, w = int(shape[0]), int(shape[1])
    n = h * w
    weights = np.zeros(n)
    g = rng.generator()

    if kind == "uniform-random":
        count = int(round(rate * n))
        idx = g.choice(n, size=count, replace=False)
        weights[idx] = 1.0
    elif kind == "variable-density":
        count = int(round(rate * n))
        probs = _density(kspace_radius((h, w)), decay).ravel()
        probs[0] = 0.0  # DC is always included, sample the rest
        weights[0] = 1.0
        if count > 1:
            probs = probs / probs.sum()
            idx = g.choice(n, size=count - 1, replace=False, p=probs)
            weights[idx] = 1.0
    elif kind == "low-pass":
        count = int(round(rate * n))
        order = np.argsort(kspace_radius((h, w)).ravel(), kind="stable")
        weights[order[:count]] = 1.0
    elif kind == "random-lines":
        n_lines = w if axis == "vertical" else h
        count = int(round(rate * n_lines))
        offs = np.fft.fftfreq(n_lines) * n_lines
        probs = _density(np.abs(offs), decay)
        probs = probs / probs.sum()
        lines = g.choice(n_lines, size=max(count, 1), replace=False, p=probs)
        w2 = weights.reshape(h, w)
        if axis == "vertical":
            w2[:, lines] = 1.0
        else:
            w2[lines, :] = 1.0
    else:
        raise ConfigError(f"unknown baseline kind {kind!r}")

    return ParamVector(weights.reshape(h, w), 0.0)


def _line_mask(shape, axis, j):
    m = np.zeros(shape)
    if axis == "vertical":
        m[:, j] = 1.0
    else:
        m[j, :] = 1.0
    return m


def _mean_train_ssim(weights, alpha, pairs, cfg):
    vals = []
    for pair in pairs:
        problem = LowerLevelProblem(
            y=pair.y, params=ParamVector(weights, alpha), rho=cfg.rho,
            op=cfg.op, eps=cfg.eps)
        state = solve(problem, tol=cfg.pdhg_tol, maxit=cfg.pdhg_maxit)
        vals.append(ssim(state.u, pair.u_star))
    return float(np.mean(vals))


def greedy_lines(pairs, cfg, rate, axis="vertical", return_trace=False):
    """Greedy Cartesian-line selection: starting from the empty pattern, add
    the line that maximizes mean training SSIM of the reconstruction at a
    fixed alpha (pre-tuned on the full pattern), until the line budget
    round(rate * n_lines) is reached; then re-tune alpha on the result."""
    shape = pairs[0].u_star.shape
    n_lines = shape[1] if axis == "vertical" else shape[0]
    budget = int(round(rate * n_lines))
    if budget < 1:
        raise DegeneratePatternError("line budget is zero")

    alpha_fixed = retune_alpha(np.ones(shape), pairs, cfg)
    weights = np.zeros(shape)
    remaining = list(range(n_lines))
    trace = []
    for _ in range(budget):
        best_j, best_val = None, -np.inf
        for j in remaining:
            cand = np.maximum(weights, _line_mask(shape, axis, j))
            val = _mean_train_ssim(cand, alpha_fixed, pairs, cfg)
            if val > best_val:
                best_j, best_val = j, val
        weights = np.maximum(weights, _line_mask(shape, axis, best_j))
        remaining.remove(best_j)
        trace.append((best_j, best_val))

    alpha = retune_alpha(weights, pairs, cfg)
    pattern = ParamVector(weights, alpha)
    return (pattern, trace) if return_trace else pattern


def kde_pattern(p, bandwidth):
    """Gaussian kernel density estimate of a sampling pattern: blur the
    weight plane and normalize to sum 1."""
    if not bandwidth > 0:
        raise DomainError("bandwidth must be positive")
    w = p.weights if isinstance(p, ParamVector) else np.asarray(p, dtype=np.float64)
    if not np.any(w):
        raise DegeneratePatternError("cannot estimate a density of an all-zero pattern")
    r = int(np.ceil(4.0 * bandwidth))
    ax = np.arange(-r, r + 1)
    k1 = np.exp(-(ax ** 2) / (2.0 * bandwidth ** 2))
    kernel = np.outer(k1, k1)
    out = convolve2d(w, kernel, mode="same")
    return out / out.sum()
