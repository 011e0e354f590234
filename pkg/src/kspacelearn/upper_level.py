"""The bilevel objective: sampling-pattern parametrizations, the sparsity
penalty, reconstruction losses, objective/gradient assembly over a training
set, and the two-phase learning driver."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import optim
from .adjoint_grad import implicit_grad
from .core import ParamVector, norm2
from .errors import ConfigError, DegeneratePatternError, DomainError, KspaceLearnError
from .linops import AnalysisOp, grad_adjoint, grad_apply, gradient_op
from .lower_level import LowerLevelProblem, solve
from .regularizer import J_eval, J_grad, RhoSpec

__all__ = [
    "LearnConfig",
    "Parametrization",
    "TrainingPair",
    "WarmCache",
    "learn",
    "loss",
    "loss_grad",
    "objective_and_grad",
    "param_apply",
    "param_pullback",
    "penalty",
    "penalty_grad",
    "threshold_and_retune",
]


@dataclass(frozen=True)
class TrainingPair:
    u_star: np.ndarray  # ground-truth image (complex, usually real-valued)
    y: np.ndarray       # fully sampled noisy k-space

    def __post_init__(self):
        if self.u_star.shape != self.y.shape:
            raise ConfigError("u_star and y must have the same shape")


@dataclass(frozen=True)
class Parametrization:
    """Maps the optimization variable lambda to a full ParamVector.

    kinds:
      * ``free``: lambda = (all n weights, alpha),
      * ``lines``: lambda = (one weight per k-space line along ``axis``, alpha);
        ``axis="vertical"`` broadcasts over columns, ``"horizontal"`` over rows,
      * ``alpha_only``: lambda = (alpha,) with ``fixed_weights`` held constant.
    """

    kind: str
    shape: tuple
    axis: str = "vertical"
    fixed_weights: np.ndarray = None

    def __post_init__(self):
        if self.kind not in ("free", "lines", "alpha_only"):
            raise ConfigError(f"unknown parametrization kind {self.kind!r}")
        if self.kind == "lines" and self.axis not in ("vertical", "horizontal"):
            raise ConfigError(f"unknown line axis {self.axis!r}")
        if self.kind == "alpha_only":
            if self.fixed_weights is None:
                raise ConfigError("alpha_only requires fixed_weights")
            if self.fixed_weights.shape != tuple(self.shape):
                raise ConfigError("fixed_weights shape mismatch")

    @property
    def lambda_dim(self):
        h, w = self.shape
        if self.kind == "free":
            return h * w + 1
        if self.kind == "lines":
            return (w if self.axis == "vertical" else h) + 1
        return 1

    def bounds(self, alpha_max=np.inf):
        d = self.lambda_dim
        lo = np.zeros(d)
        hi = np.ones(d)
        hi[-1] = alpha_max
        return optim.BoxBounds(lo, hi)


def _check_lambda(par, lam):
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (par.lambda_dim,):
        raise DomainError(
            f"lambda must have length {par.lambda_dim}, got {lam.shape}")
    if np.any(lam[:-1] < 0.0) or np.any(lam[:-1] > 1.0) or lam[-1] < 0.0:
        raise DomainError("lambda outside its box; projection is not silent")
    return lam


def param_apply(par, lam):
    """p(lambda): expand the optimization variable to a full ParamVector."""
    lam = _check_lambda(par, lam)
    h, w = par.shape
    if par.kind == "free":
        return ParamVector(lam[:-1].reshape(h, w), lam[-1])
    if par.kind == "lines":
        if par.axis == "vertical":
            weights = np.broadcast_to(lam[:-1][None, :], (h, w)).copy()
        else:
            weights = np.broadcast_to(lam[:-1][:, None], (h, w)).copy()
        return ParamVector(weights, lam[-1])
    return ParamVector(par.fixed_weights, lam[-1])


def param_pullback(par, lam, g):
    """Exact adjoint of the parametrization Jacobian applied to a
    parameter-space gradient g (length n+1)."""
    lam = _check_lambda(par, lam)
    h, w = par.shape
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (h * w + 1,):
        raise DomainError(f"expected length {h * w + 1} gradient, got {g.shape}")
    gw = g[:-1].reshape(h, w)
    if par.kind == "free":
        return g.copy()
    if par.kind == "lines":
        axis = 0 if par.axis == "vertical" else 1
        return np.concatenate([gw.sum(axis=axis), [g[-1]]])
    return np.array([g[-1]])


def penalty(p, beta):
    """Sparsity penalty P(p) = beta sum_i (p_i + p_i (1 - p_i))."""
    w = p.weights
    return float(beta * np.sum(2.0 * w - w ** 2))


def penalty_grad(p, beta):
    """Gradient of the penalty as a parameter-space vector (alpha entry 0)."""
    gw = beta * (2.0 - 2.0 * p.weights)
    return np.concatenate([gw.ravel(), [0.0]])


def loss(kind, u, u_star, gamma_loss=1e-2):
    """Reconstruction loss: squared L2 distance, or a smoothed total
    variation of the gradient error."""
    if kind == "l2":
        return 0.5 * norm2(u - u_star) ** 2
    if kind == "tv":
        d = grad_apply(u_star) - grad_apply(u)
        return J_eval(RhoSpec("huber", gamma_loss), d)
    raise ConfigError(f"unknown loss kind {kind!r}")


def loss_grad(kind, u, u_star, gamma_loss=1e-2):
    if kind == "l2":
        return u - u_star
    if kind == "tv":
        d = grad_apply(u_star) - grad_apply(u)
        return -grad_adjoint(J_grad(RhoSpec("huber", gamma_loss), d))
    raise ConfigError(f"unknown loss kind {kind!r}")


@dataclass
class LearnConfig:
    beta: float = 0.0
    rho: RhoSpec = field(default_factory=lambda: RhoSpec("huber", 1e-2))
    op: AnalysisOp = field(default_factory=gradient_op)
    eps: float = 1e-4
    pdhg_tol: float = 1e-9
    pdhg_maxit: int = 20000
    cg_tol: float = 1e-8
    cg_maxit: int = 2000
    lbfgsb_m: int = 10
    maxiter: int = 500
    pgtol: float = 1e-6
    frtol: float = 1e-10
    loss_kind: str = "l2"
    gamma_loss: float = 1e-2
    parametrization: Parametrization = None
    alpha0: float = None      # None -> data-driven heuristic
    alpha_max_factor: float = 1e3
    fix_alpha: bool = False   # used with the zero regularizer (alpha stays at 0)
    warm_trust: float = 10.0
    threads: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.beta < 0:
            raise ConfigError("beta must be nonnegative")
        for name in ("pdhg_tol", "cg_tol", "pgtol", "frtol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")


class WarmCache:
    """Warm-start states per training index; cleared when lambda moves more
    than the configured trust distance since the last evaluation."""

    def __init__(self, trust=10.0):
        self.trust = trust
        self.states = {}
        self.last_lambda = None

    def maybe_clear(self, lam):
        if self.last_lambda is not None and self.last_lambda.shape == lam.shape:
            if np.max(np.abs(lam - self.last_lambda)) > self.trust:
                self.states.clear()
        self.last_lambda = lam.copy()

    def get(self, i):
        return self.states.get(i)

    def put(self, i, state):
        self.states[i] = state


def _per_example(i, pair, params, cfg):
    problem = LowerLevelProblem(
        y=pair.y, params=params, rho=cfg.rho, op=cfg.op, eps=cfg.eps)
    return problem


def objective_and_grad(lam, pairs, cfg, warm_cache=None):
    """Objective value and lambda-space gradient of the bilevel problem at
    lambda; lower-level solves are warm started and may run in parallel, with
    a fixed-order reduction for determinism."""
    par = cfg.parametrization
    lam = np.asarray(lam, dtype=np.float64)
    params = param_apply(par, lam)
    if warm_cache is not None:
        warm_cache.maybe_clear(lam)

    def work(i):
        pair = pairs[i]
        problem = _per_example(i, pair, params, cfg)
        warm = warm_cache.get(i) if warm_cache is not None else None
        try:
            state = solve(problem, warm=warm, tol=cfg.pdhg_tol,
                          maxit=cfg.pdhg_maxit)
            li = loss(cfg.loss_kind, state.u, pair.u_star, cfg.gamma_loss)
            lg = loss_grad(cfg.loss_kind, state.u, pair.u_star, cfg.gamma_loss)
            gi = implicit_grad(state.u, problem, lg,
                               tol=cfg.cg_tol, maxit=cfg.cg_maxit)
        except KspaceLearnError as exc:
            raise type(exc)(f"training example {i}: {exc}") from exc
        return state, li, gi

    n_idx = range(len(pairs))
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            results = list(ex.map(work, n_idx))
    else:
        results = [work(i) for i in n_idx]

    total_loss = 0.0
    total_g = np.zeros(params.n + 1)
    for i in n_idx:  # fixed index order keeps the reduction deterministic
        state, li, gi = results[i]
        if warm_cache is not None:
            warm_cache.put(i, state)
        total_loss += li
        total_g += gi
    n = float(len(pairs))
    value = total_loss / n + penalty(params, cfg.beta)
    grad_p = total_g / n + penalty_grad(params, cfg.beta)
    if cfg.fix_alpha:
        grad_p[-1] = 0.0
    return value, param_pullback(par, lam, grad_p)


def _default_alpha0(pairs):
    n = pairs[0].y.size
    scale = np.mean([norm2(p.y) ** 2 for p in pairs])
    return 1e-2 * scale / n


def _run_phase(pairs, cfg, par, lam0, alpha_max, history, phase):
    cache = WarmCache(trust=cfg.warm_trust)
    records = []

    def cb(it, x, f, pg_norm):
        p = param_apply(par, x)
        records.append({
            "phase": phase, "iter": it, "objective": f,
            "sampling_fraction": p.sampling_fraction,
            "proj_grad_norm": pg_norm, "alpha": p.alpha,
        })

    cfg_phase = replace(cfg, parametrization=par)
    x_star, _ = optim.minimize(
        lambda lam: objective_and_grad(lam, pairs, cfg_phase, cache),
        lam0, par.bounds(alpha_max=alpha_max), m=cfg.lbfgsb_m,
        maxiter=cfg.maxiter, pgtol=cfg.pgtol, frtol=cfg.frtol, callback=cb)
    history.extend(records)
    return x_star


def learn(pairs, cfg):
    """Two-phase learning: first tune alpha at full sampling, then optimize
    the target parametrization starting from (full weights, tuned alpha).
    Returns (lambda_star, history)."""
    if not pairs:
        raise ConfigError("training set must be nonempty")
    shape = pairs[0].u_star.shape
    par = cfg.parametrization
    if par is None:
        par = Parametrization(kind="free", shape=shape)
    alpha0 = cfg.alpha0 if cfg.alpha0 is not None else _default_alpha0(pairs)
    alpha_max = cfg.alpha_max_factor * max(alpha0, 1e-12)
    history = []

    if par.kind == "alpha_only":
        lam0 = np.array([min(alpha0, alpha_max)])
        x_star = _run_phase(pairs, cfg, par, lam0, alpha_max, history, phase=1)
        return x_star, history

    # phase 1: optimal alpha at full sampling
    if cfg.fix_alpha:
        alpha1 = alpha0
    else:
        par1 = Parametrization(kind="alpha_only", shape=shape,
                               fixed_weights=np.ones(shape))
        lam1 = _run_phase(pairs, cfg, par1, np.array([min(alpha0, alpha_max)]),
                          alpha_max, history, phase=1)
        alpha1 = float(lam1[0])

    # phase 2: the target parametrization from (full weights, tuned alpha)
    lam0 = np.concatenate([np.ones(par.lambda_dim - 1), [alpha1]])
    x_star = _run_phase(pairs, cfg, par, lam0, alpha_max, history, phase=2)
    return x_star, history


def threshold_and_retune(lambda_star, pairs, cfg, par=None):
    """Binarize a learned pattern (p_i > 0 -> 1) and re-tune alpha on the
    training set for the thresholded pattern. Returns (binary ParamVector
    weights, alpha)."""
    if par is None:
        par = cfg.parametrization
    p = param_apply(par, lambda_star)
    binary = (p.weights > 0.0).astype(np.float64)
    if not np.any(binary):
        raise DegeneratePatternError("thresholded pattern has no active samples")
    alpha = retune_alpha(binary, pairs, cfg)
    return binary, alpha


def retune_alpha(weights, pairs, cfg):
    """AlphaOnly learning pass for a fixed pattern; returns the tuned alpha."""
    shape = pairs[0].u_star.shape
    par = Parametrization(kind="alpha_only", shape=shape, fixed_weights=weights)
    cfg_a = replace(cfg, parametrization=par)
    lam, _ = learn(pairs, cfg_a)
    return float(lam[0])
