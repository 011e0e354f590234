"""Implicit differentiation of the reconstruction map: Hessian-vector
products of the lower-level energy, the mixed parameter/image derivative,
a conjugate-gradient adjoint solve and the assembled upper-level gradient

    g = -D_{p,u}E(u_hat) [D^2_u E(u_hat)]^{-1} grad L(u_hat).
"""

from dataclasses import dataclass, field

import numpy as np

from .core import inner_real, norm2
from .errors import ConvergenceError, SpdViolationError
from .linops import dft2, idft2
from .regularizer import J_grad, J_hess_apply

__all__ = [
    "HessianOperator",
    "E_grad",
    "E_hess_apply",
    "E_mixed_apply",
    "cg_solve",
    "implicit_grad",
]


def E_grad(u, problem):
    """Gradient of the lower-level energy with respect to u:
    F^{-1} S^2 (F u - y) + alpha A*(phi(|Au|) . Au) + eps u."""
    p = problem.params
    out = idft2(p.weights ** 2 * (dft2(u) - problem.y)) + problem.eps * u
    if p.alpha != 0.0 and problem.rho.kind != "zero":
        Au = problem.op.apply(u)
        out = out + p.alpha * problem.op.adjoint(J_grad(problem.rho, Au))
    return out


@dataclass
class HessianOperator:
    """The SPD Hessian D^2_u E at a solution point, applied matrix-free."""

    u_hat: np.ndarray
    problem: "LowerLevelProblem"
    Au_hat: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.Au_hat is None:
            self.Au_hat = self.problem.op.apply(self.u_hat)

    def __call__(self, w):
        return E_hess_apply(self, w)


def E_hess_apply(H, w):
    """Hessian action: F^{-1} S^2 F w + alpha A* D^2J(A u_hat) A w + eps w."""
    pr = H.problem
    p = pr.params
    out = idft2(p.weights ** 2 * dft2(w)) + pr.eps * w
    if p.alpha != 0.0 and pr.rho.kind != "zero":
        Aw = pr.op.apply(w)
        out = out + p.alpha * pr.op.adjoint(J_hess_apply(pr.rho, H.Au_hat, Aw))
    return out


def E_mixed_apply(u_hat, problem, w):
    """Action of the mixed derivative D_{p,u}E on an image-space vector w,
    returning a parameter-space vector of length n+1.

    Weight entries: 2 p_i Re[(F w)_i conj((F u_hat - y)_i)].
    Alpha entry: <w, A*(phi(|A u_hat|) . A u_hat)> (real inner product).
    """
    p = problem.params
    resid = dft2(u_hat) - problem.y
    Fw = dft2(w)
    weight_part = 2.0 * p.weights * (Fw.real * resid.real + Fw.imag * resid.imag)
    if problem.rho.kind == "zero":
        alpha_part = 0.0
    else:
        Au = problem.op.apply(u_hat)
        alpha_part = inner_real(w, problem.op.adjoint(J_grad(problem.rho, Au)))
    return np.concatenate([weight_part.ravel(), [alpha_part]])


def cg_solve(H, b, tol=1e-8, maxit=2000):
    """Conjugate gradients for H x = b with relative residual tolerance."""
    nb = norm2(b)
    if nb == 0.0:
        return np.zeros_like(b)
    x = np.zeros_like(b)
    r = b.copy()
    d = r.copy()
    rr = inner_real(r, r)
    for _ in range(maxit):
        Hd = H(d)
        dHd = inner_real(d, Hd)
        if dHd <= 0.0:
            raise SpdViolationError(
                f"CG breakdown: <d, Hd> = {dHd:g} is not positive")
        a = rr / dHd
        x = x + a * d
        r = r - a * Hd
        rr_new = inner_real(r, r)
        if np.sqrt(rr_new) / nb <= tol:
            return x
        d = r + (rr_new / rr) * d
        rr = rr_new
    raise ConvergenceError(
        f"CG did not reach tol={tol:g} in {maxit} iterations "
        f"(relative residual {np.sqrt(rr) / nb:g})",
        residual=np.sqrt(rr) / nb)


def implicit_grad(u_hat, problem, loss_grad, tol=1e-8, maxit=2000):
    """Upper-level gradient of the per-example loss via the adjoint solve:
    q = H^{-1} loss_grad, then g = -D_{p,u}E(u_hat) q."""
    H = HessianOperator(u_hat=u_hat, problem=problem)
    q = cg_solve(H, loss_grad, tol=tol, maxit=maxit)
    return -E_mixed_apply(u_hat, problem, q)
