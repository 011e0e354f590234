"""Implicit-gradient sanity check.

The learning objective differentiates the reconstruction map through the
optimality conditions of the lower-level problem: a conjugate-gradient solve
against the (SPD) energy Hessian followed by the mixed parameter/image
derivative. This script compares that implicit gradient against brute-force
central finite differences that re-solve the reconstruction at perturbed
parameters.

    python3 demos/gradient_check_demo.py
"""

import numpy as np

from kspacelearn.adjoint_grad import implicit_grad
from kspacelearn.core import ParamVector, Rng, norm2
from kspacelearn.data_io import make_phantom, simulate_measurements
from kspacelearn.linops import gradient_op
from kspacelearn.lower_level import LowerLevelProblem, solve
from kspacelearn.regularizer import RhoSpec

SHAPE = (12, 12)
H_FD = 1e-5


def main():
    rng = Rng(42)
    u_star = make_phantom(rng.substream(1), SHAPE, 4)
    y = simulate_measurements(u_star, 0.02, rng.substream(2))
    g = rng.substream(3).generator()
    weights = 0.2 + 0.6 * g.random(SHAPE)
    p0 = np.concatenate([weights.ravel(), [0.05]])

    def make_problem(pvec):
        pv = ParamVector.from_vec(pvec, SHAPE)
        return LowerLevelProblem(y=y, params=pv, rho=RhoSpec("huber", 0.02),
                                 op=gradient_op(), eps=1e-2)

    def loss_at(pvec):
        st = solve(make_problem(pvec), tol=1e-11, maxit=400000)
        return 0.5 * norm2(st.u - u_star) ** 2

    problem = make_problem(p0)
    state = solve(problem, tol=1e-11, maxit=400000)
    grad = implicit_grad(state.u, problem, state.u - u_star,
                         tol=1e-12, maxit=5000)

    coords = list(g.choice(p0.size - 1, size=7, replace=False)) + [p0.size - 1]
    print(f"{'coordinate':>12} {'implicit':>14} {'finite diff':>14} {'rel err':>10}")
    worst = 0.0
    for k in coords:
        e = np.zeros_like(p0)
        e[k] = 1.0
        fd = (loss_at(p0 + H_FD * e) - loss_at(p0 - H_FD * e)) / (2 * H_FD)
        rel = abs(grad[k] - fd) / max(abs(fd), 1e-8)
        worst = max(worst, rel)
        name = "alpha" if k == p0.size - 1 else f"weight {k}"
        print(f"{name:>12} {grad[k]:14.8f} {fd:14.8f} {rel:10.2e}")
    print(f"\nworst relative error: {worst:.2e}")


if __name__ == "__main__":
    main()
