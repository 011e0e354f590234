import csv

import numpy as np
import pytest

from conftest import crandn
from kspacelearn.adjoint_grad import E_grad, cg_solve
from kspacelearn.core import ParamVector, norm2
from kspacelearn.errors import ConfigError, DivergenceError
from kspacelearn.linops import (dft2, grad_adjoint, grad_apply, gradient_op,
                                identity_op, idft2)
from kspacelearn.lower_level import (ETA_FLOOR, LowerLevelProblem, energy,
                                     pdhg_params, prox_F1, prox_G, solve,
                                     zero_fill, _prox_sigma_fstar)
from kspacelearn.regularizer import RhoSpec, prox_F2, smoothness_bound


def _problem(rng, shape=(16, 16), alpha=0.02, eps=1e-2, rho=None, op=None,
             pattern=None):
    g = rng.generator()
    y = crandn(g, *shape)
    if pattern is None:
        pattern = (g.random(shape) < 0.5).astype(np.float64)
    return LowerLevelProblem(
        y=y, params=ParamVector(pattern, alpha),
        rho=rho if rho is not None else RhoSpec("huber", 0.05),
        op=op if op is not None else gradient_op(), eps=eps)


def test_problem_validation(rng):
    g = rng.generator()
    y = crandn(g, 4, 4)
    pv = ParamVector(np.ones((4, 4)), 0.1)
    with pytest.raises(ConfigError):
        LowerLevelProblem(y=y, params=pv, rho=RhoSpec("zero"),
                          op=identity_op(), eps=0.0)
    with pytest.raises(ConfigError):
        LowerLevelProblem(y=crandn(g, 5, 5), params=pv, rho=RhoSpec("zero"),
                          op=identity_op(), eps=1e-2)


def test_prox_F1_per_frequency_oracle(rng):
    g = rng.generator()
    y = crandn(g, 8, 8)
    v = crandn(g, 8, 8)
    s = g.random((8, 8))
    params = ParamVector(s, 0.0)
    tau = 0.7
    got = dft2(prox_F1(v, tau, y, params))
    fv = dft2(v)
    expect = np.empty_like(fv)
    for i in range(8):
        for j in range(8):
            s2 = s[i, j] ** 2
            expect[i, j] = (fv[i, j] + tau * s2 * y[i, j]) / (1.0 + tau * s2)
    assert np.max(np.abs(got - expect)) < 1e-12


def test_prox_F1_is_prox_of_data_term(rng):
    # minimizer of ||x - v||^2/(2 tau) + 1/2 ||S(Fx - y)||^2 has zero gradient
    g = rng.generator()
    y = crandn(g, 8, 8)
    v = crandn(g, 8, 8)
    s = g.random((8, 8))
    params = ParamVector(s, 0.0)
    tau = 0.4
    x = prox_F1(v, tau, y, params)
    grad = (x - v) / tau + idft2(s ** 2 * (dft2(x) - y))
    assert norm2(grad) < 1e-12 * max(1.0, norm2(x))


def test_prox_G_scalar_oracle():
    # 1-D brute force for x -> (x-u)^2/(2 tau) + eps x^2 / 2
    u, tau, eps = 1.7, 0.3, 0.05
    grid = np.linspace(-1, 3, 4000001)
    vals = (grid - u) ** 2 / (2 * tau) + eps * grid ** 2 / 2
    brute = grid[np.argmin(vals)]
    got = prox_G(np.array([[u + 0j]]), tau, eps)[0, 0].real
    assert abs(got - brute) < 1e-6
    assert abs(got - u / (eps * tau + 1)) < 1e-14


def test_pdhg_params_formulas(rng):
    prob = _problem(rng, alpha=0.1)
    par = pdhg_params(prob)
    eta_expect = max(float(np.max(prob.params.weights ** 2)),
                     0.1 * smoothness_bound(prob.rho, prob.op.M))
    assert par.eta == pytest.approx(eta_expect)
    L = prob.op.norm_bound
    mu = 2 * np.sqrt(prob.eps / ((1 + L ** 2) * par.eta))
    assert par.mu == pytest.approx(mu)
    assert par.tau == pytest.approx(mu / (2 * prob.eps))
    assert par.sigma == pytest.approx(mu * par.eta / 2)
    assert par.theta == pytest.approx(1 / (1 + mu))


def test_pdhg_params_eta_floor(rng):
    prob = _problem(rng, alpha=0.0, pattern=np.zeros((16, 16)),
                    rho=RhoSpec("zero"), op=identity_op())
    assert pdhg_params(prob).eta == ETA_FLOOR


def test_zero_fill(rng):
    prob = _problem(rng)
    expect = idft2(prob.params.weights ** 2 * prob.y)
    assert np.array_equal(zero_fill(prob), expect)


def test_moreau_consistency(rng):
    prob = _problem(rng, alpha=0.05)
    sigma = 0.3
    g = rng.generator()
    for _ in range(20):
        x1 = crandn(g, 16, 16)
        x2 = crandn(g, 2, 16, 16)
        f1, f2 = _prox_sigma_fstar(prob, x1, x2, sigma)
        p1 = prox_F1(x1 / sigma, 1 / sigma, prob.y, prob.params)
        p2 = prox_F2(prob.rho, x2 / sigma, prob.params.alpha / sigma)
        assert np.max(np.abs(f1 + sigma * p1 - x1)) < 1e-10
        assert np.max(np.abs(f2 + sigma * p2 - x2)) < 1e-10


def test_solve_full_pattern_closed_form(rng):
    # zero regularizer, full sampling: minimizer is F^{-1} y / (1 + eps)
    g = rng.generator()
    y = crandn(g, 16, 16)
    eps = 1e-2
    prob = LowerLevelProblem(y=y, params=ParamVector(np.ones((16, 16)), 0.0),
                             rho=RhoSpec("zero"), op=identity_op(), eps=eps)
    st = solve(prob, tol=1e-13, maxit=50000)
    expect = idft2(y / (1.0 + eps))
    assert norm2(st.u - expect) / norm2(expect) < 1e-10


def test_solve_gradient_optimality(rng):
    prob = _problem(rng, alpha=0.05)
    st = solve(prob, tol=1e-10, maxit=100000)
    ratio = norm2(E_grad(st.u, prob)) / norm2(E_grad(np.zeros_like(st.u), prob))
    assert ratio < 1e-6


def test_solve_decreases_energy_and_warm_restart(rng):
    prob = _problem(rng, alpha=0.05)
    st = solve(prob, tol=1e-10, maxit=100000)
    assert energy(prob, st.u) <= energy(prob, zero_fill(prob))
    st2 = solve(prob, warm=st, tol=1e-10, maxit=100)
    assert st2.iters <= 2


def test_solve_h1_matches_normal_equation_cg(rng):
    # quadratic rho with A = grad: the energy is quadratic, so the solution
    # solves (F^-1 S^2 F + alpha grad* grad + eps I) u = F^-1 S^2 y
    alpha, eps = 0.3, 1e-2
    prob = _problem(rng, shape=(16, 16), alpha=alpha, eps=eps,
                    rho=RhoSpec("quadratic"), op=gradient_op())
    s2 = prob.params.weights ** 2

    def H(w):
        return (idft2(s2 * dft2(w)) + alpha * grad_adjoint(grad_apply(w))
                + eps * w)

    ref = cg_solve(H, idft2(s2 * prob.y), tol=1e-12, maxit=10000)
    st = solve(prob, tol=1e-10, maxit=200000)
    assert norm2(st.u - ref) / norm2(ref) < 1e-8


def test_solve_linear_convergence(rng):
    prob = _problem(rng, shape=(16, 16), alpha=0.05)
    ref = solve(prob, tol=1e-13, maxit=200000).u
    errs = []
    st = None
    for _ in range(6):
        st = solve(prob, warm=st, tol=1e-300, maxit=100)
        errs.append(norm2(st.u - ref))
    for a, b in zip(errs, errs[1:]):
        if a > 1e-11:  # above the reference's own accuracy floor
            assert b <= 0.9 * a


def test_solve_rejects_bad_arguments(rng):
    prob = _problem(rng)
    with pytest.raises(ConfigError):
        solve(prob, tol=0.0)
    with pytest.raises(ConfigError):
        solve(prob, maxit=0)


def test_solve_divergence_detected(rng):
    prob = _problem(rng)
    bad = LowerLevelProblem(y=prob.y * np.nan, params=prob.params,
                            rho=prob.rho, op=prob.op, eps=prob.eps)
    with pytest.raises(DivergenceError):
        solve(bad, maxit=10)


def test_solve_trace_csv(tmp_path, rng):
    prob = _problem(rng)
    path = tmp_path / "trace.csv"
    st = solve(prob, tol=1e-6, maxit=5000, trace_path=path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["iter", "rel_change", "energy"]
    assert len(rows) == st.iters + 1
    energies = [float(r[2]) for r in rows[1:]]
    assert energies[-1] <= energies[0]
