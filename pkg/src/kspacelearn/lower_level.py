"""Linearly convergent PDHG solver for the variational reconstruction problem

    min_u  1/2 ||S(p)(F u - y)||^2 + alpha(p) J(A u) + eps/2 ||u||^2

with the step sizes that exploit the eps-strong convexity of the quadratic
term and the smoothness of the dualized part.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .core import ParamVector, as_image, norm2
from .errors import ConfigError, DivergenceError
from .linops import AnalysisOp, dft2, idft2
from .regularizer import J_eval, RhoSpec, prox_F2, smoothness_bound

__all__ = [
    "LowerLevelProblem",
    "PdhgParams",
    "SolveState",
    "energy",
    "pdhg_params",
    "prox_F1",
    "prox_G",
    "solve",
    "zero_fill",
]

ETA_FLOOR = 1e-12  # keeps the step-size formulas defined for all-zero patterns


@dataclass(frozen=True)
class LowerLevelProblem:
    y: np.ndarray        # full noisy k-space, complex (H, W)
    params: ParamVector  # pattern weights + alpha
    rho: RhoSpec
    op: AnalysisOp
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if self.y.shape != self.params.weights.shape:
            raise ConfigError(
                f"k-space shape {self.y.shape} does not match pattern shape "
                f"{self.params.weights.shape}")


@dataclass(frozen=True)
class PdhgParams:
    mu: float
    tau: float
    sigma: float
    theta: float
    eta: float


@dataclass
class SolveState:
    u: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    u_bar: np.ndarray
    iters: int = 0
    rel_change: float = np.inf


def energy(problem, u):
    """The lower-level objective value at u."""
    s = problem.params.weights
    r = s * (dft2(u) - problem.y)
    data = 0.5 * float(np.sum(r.real ** 2 + r.imag ** 2))
    reg = problem.params.alpha * J_eval(problem.rho, problem.op.apply(u))
    return data + reg + 0.5 * problem.eps * norm2(u) ** 2


def prox_F1(v, tau, y, params):
    """Exact prox of the data term v -> 1/2 ||S(F v - y)||^2:
    F^{-1} (I + tau S^2)^{-1} (F v + tau S^2 y)."""
    s2 = params.weights ** 2
    return idft2((dft2(v) + tau * s2 * y) / (1.0 + tau * s2))


def prox_G(u, tau, eps):
    """Prox of the strong-convexity term eps/2 ||u||^2: a uniform shrink."""
    return as_image(u) / (eps * tau + 1.0)


def pdhg_params(problem):
    """Step sizes giving a linear convergence rate:
    mu = 2 sqrt(eps / ((1 + L^2) eta)), tau = mu/(2 eps), sigma = mu eta / 2,
    theta = 1/(1 + mu), with eta the smoothness bound of the dualized part."""
    if not problem.eps > 0:
        raise ConfigError("eps must be positive")
    p = problem.params
    c_p = p.alpha * smoothness_bound(problem.rho, problem.op.M)
    eta = max(float(np.max(p.weights ** 2)), c_p)
    if eta <= 0.0:
        eta = ETA_FLOOR
    L = problem.op.norm_bound
    mu = 2.0 * np.sqrt(problem.eps / ((1.0 + L ** 2) * eta))
    return PdhgParams(
        mu=mu,
        tau=mu / (2.0 * problem.eps),
        sigma=mu * eta / 2.0,
        theta=1.0 / (1.0 + mu),
        eta=eta,
    )


def zero_fill(problem):
    """Zero-filling reconstruction F^{-1}(S^2 y), the default initialization."""
    return idft2(problem.params.weights ** 2 * problem.y)


def _prox_sigma_fstar(problem, x1, x2, sigma):
    """Moreau: prox_{sigma F*}(x) = x - sigma prox_{F/sigma}(x/sigma),
    applied separably to the two dual blocks."""
    inv = 1.0 / sigma
    p1 = prox_F1(x1 * inv, inv, problem.y, problem.params)
    p2 = prox_F2(problem.rho, x2 * inv, inv * problem.params.alpha)
    return x1 - sigma * p1, x2 - sigma * p2


def solve(problem, warm=None, tol=1e-9, maxit=20000, trace_path=None):
    """Run PDHG until the combined relative primal/dual change drops below
    ``tol`` or ``maxit`` iterations elapse. ``warm`` restarts from a previous
    :class:`SolveState` for the same problem shape."""
    if not tol > 0:
        raise ConfigError("tol must be positive")
    if maxit < 1:
        raise ConfigError("maxit must be >= 1")
    par = pdhg_params(problem)
    A = problem.op

    if warm is not None:
        u = warm.u.copy()
        v1 = warm.v1.copy()
        v2 = warm.v2.copy()
        u_bar = warm.u_bar.copy()
    else:
        u = zero_fill(problem)
        v1 = u.copy()
        v2 = A.apply(u)
        u_bar = u.copy()

    trace_rows = [] if trace_path is not None else None
    iters = 0
    rel = np.inf
    for k in range(maxit):
        x1 = v1 + par.sigma * u_bar
        x2 = v2 + par.sigma * A.apply(u_bar)
        v1_new, v2_new = _prox_sigma_fstar(problem, x1, x2, par.sigma)
        u_new = prox_G(u - par.tau * (v1_new + A.adjoint(v2_new)), par.tau, problem.eps)
        u_bar = u_new + par.theta * (u_new - u)

        if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v1_new))
                and np.all(np.isfinite(v2_new))):
            raise DivergenceError(
                f"PDHG produced a non-finite iterate at iteration {k}",
                iteration=k)

        du = norm2(u_new - u)
        dv = np.sqrt(norm2(v1_new - v1) ** 2 + norm2(v2_new - v2) ** 2)
        nu = norm2(u)
        nv = np.sqrt(norm2(v1) ** 2 + norm2(v2) ** 2)
        rel = du / max(nu, 1e-300) + dv / max(nv, 1e-300)

        u, v1, v2 = u_new, v1_new, v2_new
        iters = k + 1
        if trace_rows is not None:
            trace_rows.append((iters, rel, energy(problem, u)))
        if rel <= tol:
            break

    if trace_path is not None:
        with open(trace_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "rel_change", "energy"])
            w.writerows(trace_rows)

    return SolveState(u=u, v1=v1, v2=v2, u_bar=u_bar, iters=iters, rel_change=rel)
