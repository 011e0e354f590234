"""Experiment configuration: an INI-style key-value document with sections,
parsed into the structures the library consumes. A fully annotated example
lives in ``docs/example_config.ini``."""

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .linops import gradient_op, identity_op, wavelet_op
from .regularizer import RhoSpec
from .upper_level import LearnConfig, Parametrization

__all__ = ["ExperimentConfig", "build_learn_config", "load_config"]

GAMMA_REL = 1e-2  # gamma = GAMMA_REL * max |grad u*| over the training set


@dataclass
class ExperimentConfig:
    # dataset
    shape: tuple = (32, 32)
    n_train: int = 5
    n_test: int = 10
    ellipse_count: int = 6
    noise_sigma_rel: float = 0.02
    seed: int = 1234
    manifest: str = "data/manifest.txt"
    # regularizer
    rho_kind: str = "huber"
    gamma: str = "auto"
    operator: str = "gradient"
    wavelet_levels: int = 2
    # lower level; learning-speed calibrated, looser than the library
    # defaults which favor gradient-check accuracy
    eps: float = 1e-2
    pdhg_tol: float = 1e-6
    pdhg_maxit: int = 20000
    # adjoint
    cg_tol: float = 1e-6
    cg_maxit: int = 2000
    # upper level
    beta: float = 3e-4
    beta_list: list = field(default_factory=lambda: [3e-5, 3e-4, 3e-3])
    loss_kind: str = "l2"
    parametrization: str = "free"
    lbfgsb_m: int = 10
    maxiter: int = 400
    pgtol: float = 1e-2
    frtol: float = 1e-10
    threads: int = 1
    # baseline / kde
    baseline_kind: str = "uniform-random"
    rate: float = 0.25
    decay: float = 4.0
    axis: str = "vertical"
    bandwidth: float = 2.0


def _parse_shape(s):
    try:
        h, _, w = s.partition("x")
        return (int(h), int(w))
    except ValueError as exc:
        raise ConfigError(f"bad shape {s!r}, expected e.g. 32x32") from exc


def load_config(path):
    """Parse an experiment config file; unknown keys are rejected."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    cfg = ExperimentConfig()
    setters = {
        ("dataset", "shape"): lambda v: setattr(cfg, "shape", _parse_shape(v)),
        ("dataset", "n_train"): lambda v: setattr(cfg, "n_train", int(v)),
        ("dataset", "n_test"): lambda v: setattr(cfg, "n_test", int(v)),
        ("dataset", "ellipse_count"): lambda v: setattr(cfg, "ellipse_count", int(v)),
        ("dataset", "noise_sigma_rel"): lambda v: setattr(cfg, "noise_sigma_rel", float(v)),
        ("dataset", "seed"): lambda v: setattr(cfg, "seed", int(v)),
        ("dataset", "manifest"): lambda v: setattr(cfg, "manifest", v),
        ("regularizer", "rho"): lambda v: setattr(cfg, "rho_kind", v),
        ("regularizer", "gamma"): lambda v: setattr(cfg, "gamma", v),
        ("regularizer", "operator"): lambda v: setattr(cfg, "operator", v),
        ("regularizer", "wavelet_levels"): lambda v: setattr(cfg, "wavelet_levels", int(v)),
        ("lower_level", "eps"): lambda v: setattr(cfg, "eps", float(v)),
        ("lower_level", "tol"): lambda v: setattr(cfg, "pdhg_tol", float(v)),
        ("lower_level", "maxit"): lambda v: setattr(cfg, "pdhg_maxit", int(v)),
        ("adjoint", "cg_tol"): lambda v: setattr(cfg, "cg_tol", float(v)),
        ("adjoint", "cg_maxit"): lambda v: setattr(cfg, "cg_maxit", int(v)),
        ("upper_level", "beta"): lambda v: setattr(cfg, "beta", float(v)),
        ("upper_level", "beta_list"): lambda v: setattr(
            cfg, "beta_list", [float(x) for x in v.replace(",", " ").split()]),
        ("upper_level", "loss"): lambda v: setattr(cfg, "loss_kind", v),
        ("upper_level", "parametrization"): lambda v: setattr(cfg, "parametrization", v),
        ("upper_level", "lbfgsb_m"): lambda v: setattr(cfg, "lbfgsb_m", int(v)),
        ("upper_level", "maxiter"): lambda v: setattr(cfg, "maxiter", int(v)),
        ("upper_level", "pgtol"): lambda v: setattr(cfg, "pgtol", float(v)),
        ("upper_level", "frtol"): lambda v: setattr(cfg, "frtol", float(v)),
        ("upper_level", "threads"): lambda v: setattr(cfg, "threads", int(v)),
        ("baseline", "kind"): lambda v: setattr(cfg, "baseline_kind", v),
        ("baseline", "rate"): lambda v: setattr(cfg, "rate", float(v)),
        ("baseline", "decay"): lambda v: setattr(cfg, "decay", float(v)),
        ("baseline", "axis"): lambda v: setattr(cfg, "axis", v),
        ("baseline", "bandwidth"): lambda v: setattr(cfg, "bandwidth", float(v)),
    }
    for section in parser.sections():
        for key, val in parser.items(section):
            setter = setters.get((section, key))
            if setter is None:
                raise ConfigError(f"{path}: unknown config key [{section}] {key}")
            try:
                setter(val)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"{path}: bad value for [{section}] {key}: {exc}") from exc
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.rho_kind not in ("huber", "quadratic", "zero"):
        raise ConfigError(f"unknown regularizer rho {cfg.rho_kind!r}")
    if cfg.operator not in ("gradient", "wavelet", "identity"):
        raise ConfigError(f"unknown analysis operator {cfg.operator!r}")
    if cfg.loss_kind not in ("l2", "tv"):
        raise ConfigError(f"unknown loss {cfg.loss_kind!r}")
    if cfg.parametrization not in ("free", "lines-vertical", "lines-horizontal",
                                   "alpha-only"):
        raise ConfigError(f"unknown parametrization {cfg.parametrization!r}")
    if not 0.0 < cfg.rate <= 1.0:
        raise ConfigError("baseline rate must lie in (0, 1]")
    for name in ("eps", "pdhg_tol", "cg_tol", "pgtol", "frtol", "bandwidth"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive")
    if cfg.beta < 0 or any(b < 0 for b in cfg.beta_list):
        raise ConfigError("beta must be nonnegative")


def auto_gamma(pairs):
    """Scale-relative Huber width: a small fraction of the largest gradient
    magnitude seen in the training images."""
    from .core import pixel_abs
    from .linops import grad_apply
    peak = max(float(np.max(pixel_abs(grad_apply(p.u_star)))) for p in pairs)
    return GAMMA_REL * max(peak, 1e-12)


def build_learn_config(cfg, train_pairs, fixed_weights=None):
    """Assemble a LearnConfig from an ExperimentConfig and the training set
    (needed to resolve gamma='auto')."""
    if cfg.rho_kind == "huber":
        gamma = auto_gamma(train_pairs) if cfg.gamma == "auto" else float(cfg.gamma)
        rho = RhoSpec("huber", gamma)
    else:
        rho = RhoSpec(cfg.rho_kind)

    if cfg.operator == "gradient":
        op = gradient_op()
    elif cfg.operator == "wavelet":
        op = wavelet_op(cfg.wavelet_levels)
    else:
        op = identity_op()

    shape = train_pairs[0].u_star.shape
    if cfg.parametrization == "free":
        par = Parametrization(kind="free", shape=shape)
    elif cfg.parametrization == "alpha-only":
        fw = fixed_weights if fixed_weights is not None else np.ones(shape)
        par = Parametrization(kind="alpha_only", shape=shape, fixed_weights=fw)
    else:
        axis = cfg.parametrization.split("-", 1)[1]
        par = Parametrization(kind="lines", shape=shape, axis=axis)

    fix_alpha = cfg.rho_kind == "zero"
    return LearnConfig(
        beta=cfg.beta, rho=rho, op=op, eps=cfg.eps,
        pdhg_tol=cfg.pdhg_tol, pdhg_maxit=cfg.pdhg_maxit,
        cg_tol=cfg.cg_tol, cg_maxit=cfg.cg_maxit,
        lbfgsb_m=cfg.lbfgsb_m, maxiter=cfg.maxiter, pgtol=cfg.pgtol,
        frtol=cfg.frtol, loss_kind=cfg.loss_kind,
        parametrization=par, fix_alpha=fix_alpha,
        alpha0=0.0 if fix_alpha else None,
        threads=cfg.threads, seed=cfg.seed)
