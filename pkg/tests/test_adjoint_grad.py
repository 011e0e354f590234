import numpy as np
import pytest

from conftest import crandn
from kspacelearn.adjoint_grad import (E_grad, E_mixed_apply, HessianOperator,
                                      cg_solve, implicit_grad)
from kspacelearn.core import ParamVector, inner_real, norm2
from kspacelearn.errors import ConvergenceError, SpdViolationError
from kspacelearn.linops import gradient_op, identity_op
from kspacelearn.lower_level import LowerLevelProblem, energy, solve
from kspacelearn.regularizer import RhoSpec


def _problem(rng, shape=(8, 8), alpha=0.05, eps=1e-2):
    g = rng.generator()
    y = crandn(g, *shape)
    pattern = g.random(shape)
    return LowerLevelProblem(y=y, params=ParamVector(pattern, alpha),
                             rho=RhoSpec("huber", 0.05), op=gradient_op(),
                             eps=eps)


def test_E_grad_matches_fd(rng):
    prob = _problem(rng)
    g = rng.generator()
    h = 1e-6
    for _ in range(10):
        u = crandn(g, 8, 8)
        w = crandn(g, 8, 8)
        fd = (energy(prob, u + h * w) - energy(prob, u - h * w)) / (2 * h)
        got = inner_real(E_grad(u, prob), w)
        assert abs(got - fd) / max(abs(fd), 1e-8) < 1e-6


def test_hessian_matches_fd_of_grad(rng):
    prob = _problem(rng)
    g = rng.generator()
    h = 1e-5
    for _ in range(10):
        u = crandn(g, 8, 8)
        w = crandn(g, 8, 8)
        H = HessianOperator(u_hat=u, problem=prob)
        fd = (E_grad(u + h * w, prob) - E_grad(u - h * w, prob)) / (2 * h)
        assert norm2(H(w) - fd) / max(norm2(fd), 1e-8) < 1e-5


def test_hessian_symmetric_and_coercive(rng):
    prob = _problem(rng)
    g = rng.generator()
    u = crandn(g, 8, 8)
    H = HessianOperator(u_hat=u, problem=prob)
    for _ in range(100):
        w = crandn(g, 8, 8)
        v = crandn(g, 8, 8)
        lhs = inner_real(v, H(w))
        rhs = inner_real(H(v), w)
        assert abs(lhs - rhs) <= 1e-10 * norm2(v) * norm2(w)
        assert inner_real(w, H(w)) >= prob.eps * norm2(w) ** 2 * (1 - 1e-12)


def test_mixed_derivative_matches_fd_in_p(rng):
    prob = _problem(rng, shape=(6, 6))
    g = rng.generator()
    u = crandn(g, 6, 6)
    w = crandn(g, 6, 6)
    got = E_mixed_apply(u, prob, w)
    h = 1e-6

    def grad_dot_w(pvec):
        pv = ParamVector.from_vec(pvec, (6, 6))
        pr = LowerLevelProblem(y=prob.y, params=pv, rho=prob.rho, op=prob.op,
                               eps=prob.eps)
        return inner_real(E_grad(u, pr), w)

    p0 = prob.params.to_vec()
    for k in list(range(0, 36, 5)) + [36]:
        e = np.zeros_like(p0)
        e[k] = 1.0
        fd = (grad_dot_w(p0 + h * e) - grad_dot_w(p0 - h * e)) / (2 * h)
        assert abs(got[k] - fd) / max(abs(fd), 1e-8) < 1e-5


def test_cg_matches_dense_solve(rng):
    prob = _problem(rng)
    g = rng.generator()
    u = crandn(g, 8, 8)
    H = HessianOperator(u_hat=u, problem=prob)
    # materialize H in the 128-dim real basis (real and imaginary unit pixels)
    n = 64
    mat = np.zeros((2 * n, 2 * n))
    for k in range(2 * n):
        e = np.zeros(2 * n)
        e[k] = 1.0
        w = (e[:n] + 1j * e[n:]).reshape(8, 8)
        hw = H(w)
        mat[:, k] = np.concatenate([hw.real.ravel(), hw.imag.ravel()])
    b = crandn(g, 8, 8)
    bb = np.concatenate([b.real.ravel(), b.imag.ravel()])
    dense = np.linalg.solve(mat, bb)
    got = cg_solve(H, b, tol=1e-12, maxit=5000)
    gotv = np.concatenate([got.real.ravel(), got.imag.ravel()])
    assert np.linalg.norm(gotv - dense) / np.linalg.norm(dense) < 1e-8


def test_cg_zero_rhs(rng):
    prob = _problem(rng)
    H = HessianOperator(u_hat=np.zeros((8, 8), dtype=np.complex128),
                        problem=prob)
    out = cg_solve(H, np.zeros((8, 8), dtype=np.complex128))
    assert np.all(out == 0)


def test_cg_detects_indefinite_operator(rng):
    b = crandn(rng.generator(), 4, 4)
    with pytest.raises(SpdViolationError):
        cg_solve(lambda w: -w, b)


def test_cg_reports_budget_exhaustion(rng):
    prob = _problem(rng, alpha=0.5)
    u = crandn(rng.generator(), 8, 8)
    H = HessianOperator(u_hat=u, problem=prob)
    b = crandn(rng.generator(), 8, 8)
    with pytest.raises(ConvergenceError):
        cg_solve(H, b, tol=1e-14, maxit=2)


def test_implicit_grad_matches_end_to_end_fd(rng):
    # small version of the keystone check: single training example on 8x8
    g = rng.generator()
    u_star = crandn(g, 8, 8)
    y = crandn(g, 8, 8)
    pattern = 0.2 + 0.6 * g.random((8, 8))
    p0 = np.concatenate([pattern.ravel(), [0.05]])

    def make_problem(pvec):
        pv = ParamVector.from_vec(pvec, (8, 8))
        return LowerLevelProblem(y=y, params=pv, rho=RhoSpec("huber", 0.05),
                                 op=gradient_op(), eps=1e-2)

    def objective(pvec):
        st = solve(make_problem(pvec), tol=1e-11, maxit=400000)
        return 0.5 * norm2(st.u - u_star) ** 2

    prob = make_problem(p0)
    st = solve(prob, tol=1e-11, maxit=400000)
    grad = implicit_grad(st.u, prob, st.u - u_star, tol=1e-12, maxit=5000)
    h = 1e-5
    for k in [0, 13, 40, 63, 64]:
        e = np.zeros_like(p0)
        e[k] = 1.0
        fd = (objective(p0 + h * e) - objective(p0 - h * e)) / (2 * h)
        assert abs(grad[k] - fd) / max(abs(fd), 1e-8) < 1e-3
