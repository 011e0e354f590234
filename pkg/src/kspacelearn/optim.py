"""Box-constrained limited-memory quasi-Newton minimizer.

The scheme follows the L-BFGS-B template: a generalized Cauchy point is
computed by a piecewise-linear breakpoint search along the projected
steepest-descent path to identify the active bounds, the limited-memory
model is minimized on the free variables via the two-loop recursion, and a
projected backtracking Armijo line search produces the next iterate.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, OptimizerError

__all__ = ["BoxBounds", "minimize", "project"]

ARMIJO_C1 = 1e-4
ARMIJO_SHRINK = 0.5
MAX_BACKTRACKS = 60
CURVATURE_EPS = 1e-12


@dataclass(frozen=True)
class BoxBounds:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if lo.shape != hi.shape:
            raise ConfigError("bounds lo/hi must have identical shapes")
        if np.any(lo > hi):
            raise ConfigError("bounds must satisfy lo <= hi coordinatewise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


def project(x, bounds):
    """Coordinatewise clamp onto the box; idempotent."""
    return np.clip(x, bounds.lo, bounds.hi)


def _projected_gradient(x, g, bounds):
    return x - project(x - g, bounds)


def _cauchy_point(x, g, bounds, theta_b):
    """Minimize the quadratic model f + g'(z) + theta_b/2 ||z||^2 along the
    projected steepest-descent path. Returns (x_cp, active_mask)."""
    lo, hi = bounds.lo, bounds.hi
    n = x.size
    with np.errstate(divide="ignore", invalid="ignore"):
        t_break = np.where(
            g > 0.0, (x - lo) / g, np.where(g < 0.0, (x - hi) / g, np.inf))
    t_break = np.maximum(t_break, 0.0)
    d = np.where(t_break > 0.0, -g, 0.0)
    frozen = t_break <= 0.0

    z = np.zeros(n)
    t_old = 0.0
    order = np.argsort(t_break, kind="stable")
    k = 0
    # skip coordinates frozen at t = 0
    while k < n and t_break[order[k]] <= 0.0:
        k += 1
    while True:
        fp = float(g @ d + theta_b * (z @ d))
        if fp >= 0.0:
            break
        fpp = float(theta_b * (d @ d))
        dt_star = -fp / fpp if fpp > 0.0 else np.inf
        t_next = t_break[order[k]] if k < n else np.inf
        dt = t_next - t_old
        if dt_star < dt:
            z = z + dt_star * d
            break
        if not np.isfinite(t_next):
            break
        z = z + dt * d
        # freeze every coordinate whose breakpoint is hit at t_next
        while k < n and t_break[order[k]] <= t_next:
            i = order[k]
            z[i] = (lo[i] if g[i] > 0.0 else hi[i]) - x[i]
            d[i] = 0.0
            frozen[i] = True
            k += 1
        t_old = t_next

    x_cp = project(x + z, bounds)
    eps = 1e-14 * np.maximum(1.0, np.abs(x_cp))
    at_bound = (x_cp <= lo + eps) | (x_cp >= hi - eps)
    return x_cp, frozen & at_bound


def _two_loop(g, s_list, y_list, theta_inv):
    """Standard inverse-Hessian two-loop recursion with H0 = theta_inv I."""
    q = g.copy()
    alphas = []
    rhos = [1.0 / float(y @ s) for s, y in zip(s_list, y_list)]
    for s, y, r in zip(reversed(s_list), reversed(y_list), reversed(rhos)):
        a = r * float(s @ q)
        alphas.append(a)
        q -= a * y
    q *= theta_inv
    for (s, y, r), a in zip(zip(s_list, y_list, rhos), reversed(alphas)):
        b = r * float(y @ q)
        q += (a - b) * s
    return q


def minimize(f_and_grad, x0, bounds, m=10, maxiter=500, pgtol=1e-6,
             frtol=1e-10, callback=None):
    """Minimize ``f_and_grad`` over a box.

    ``f_and_grad(x) -> (f, g)``. Terminates when the infinity norm of the
    projected gradient drops below ``pgtol``, the relative objective decrease
    drops below ``frtol``, or ``maxiter`` iterations elapse. Every evaluated
    point lies within the bounds. Returns ``(x_star, history)`` where history
    holds one dict per accepted iteration.
    """
    if m < 1:
        raise ConfigError("memory m must be >= 1")
    x = np.asarray(x0, dtype=np.float64).copy()
    if np.any(x < bounds.lo) or np.any(x > bounds.hi):
        raise ConfigError("x0 must lie within the bounds")

    def evaluate(xe, last_good):
        f, g = f_and_grad(xe)
        g = np.asarray(g, dtype=np.float64)
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            raise OptimizerError(
                "objective callback returned a non-finite value",
                last_iterate=last_good, history=history)
        return float(f), g

    history = []
    f, g = evaluate(x, None)
    s_list, y_list = [], []
    theta_inv = 1.0
    theta_b = 1.0

    for it in range(maxiter):
        pg = _projected_gradient(x, g, bounds)
        pg_norm = float(np.max(np.abs(pg))) if pg.size else 0.0
        history.append({"iter": it, "f": f, "pg_norm": pg_norm})
        if callback is not None:
            callback(it, x, f, pg_norm)
        if pg_norm <= pgtol:
            break

        x_cp, active = _cauchy_point(x, g, bounds, theta_b)
        d = x_cp - x
        free = ~active
        if np.any(free):
            g_free = np.where(free, g, 0.0)
            step = _two_loop(g_free, s_list, y_list, theta_inv)
            d = d.copy()
            d[free] = -step[free]
        if float(g @ d) >= 0.0:
            # model direction is not a descent direction; fall back
            d = -pg

        # projected backtracking Armijo line search
        t = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            x_new = project(x + t * d, bounds)
            dx = x_new - x
            if not np.any(dx):
                break
            f_new, g_new = evaluate(x_new, x)
            if f_new <= f + ARMIJO_C1 * float(g @ dx):
                accepted = True
                break
            t *= ARMIJO_SHRINK
        if not accepted:
            break  # no further decrease available along the model direction

        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > CURVATURE_EPS * np.linalg.norm(s) * np.linalg.norm(y):
            s_list.append(s)
            y_list.append(y)
            if len(s_list) > m:
                s_list.pop(0)
                y_list.pop(0)
            yy = float(y @ y)
            theta_inv = sy / yy
            theta_b = yy / sy

        f_old = f
        x, f, g = x_new, f_new, g_new
        if abs(f_old - f) <= frtol * max(abs(f_old), abs(f), 1.0):
            pg = _projected_gradient(x, g, bounds)
            history.append({"iter": it + 1, "f": f,
                            "pg_norm": float(np.max(np.abs(pg)))})
            if callback is not None:
                callback(it + 1, x, f, history[-1]["pg_norm"])
            break

    return x, history
