import numpy as np
import pytest

from conftest import crandn
from kspacelearn.config import (ExperimentConfig, auto_gamma,
                                build_learn_config, load_config, GAMMA_REL)
from kspacelearn.errors import ConfigError
from kspacelearn.linops import grad_apply
from kspacelearn.core import pixel_abs
from kspacelearn.upper_level import TrainingPair


def _write(tmp_path, text):
    p = tmp_path / "exp.ini"
    p.write_text(text)
    return p


def test_load_config_full_document(tmp_path):
    p = _write(tmp_path, """
[dataset]
shape = 16x24
n_train = 3
seed = 5
manifest = data/m.txt

[regularizer]
rho = quadratic
operator = wavelet
wavelet_levels = 3

[lower_level]
eps = 0.5
tol = 1e-7

[upper_level]
beta = 0.25
beta_list = 1e-4, 1e-3 1e-2
parametrization = lines-horizontal
threads = 2

[baseline]
kind = low-pass
rate = 0.5
""")
    cfg = load_config(p)
    assert cfg.shape == (16, 24)
    assert cfg.n_train == 3
    assert cfg.rho_kind == "quadratic"
    assert cfg.operator == "wavelet"
    assert cfg.wavelet_levels == 3
    assert cfg.eps == 0.5
    assert cfg.pdhg_tol == 1e-7
    assert cfg.beta == 0.25
    assert cfg.beta_list == [1e-4, 1e-3, 1e-2]
    assert cfg.parametrization == "lines-horizontal"
    assert cfg.threads == 2
    assert cfg.baseline_kind == "low-pass"


def test_load_config_rejects_unknown_key(tmp_path):
    p = _write(tmp_path, "[dataset]\nbogus = 1\n")
    with pytest.raises(ConfigError, match="unknown config key"):
        load_config(p)


def test_load_config_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[dataset]\nshape = banana\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[regularizer]\nrho = cauchy\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[lower_level]\neps = 0\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[upper_level]\nbeta = -1\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[baseline]\nrate = 1.5\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "not an ini file ["))


def test_load_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "absent.ini")


def test_auto_gamma_scale(rng):
    g = rng.generator()
    u = g.random((8, 8)).astype(np.complex128)
    pairs = [TrainingPair(u_star=u, y=crandn(g, 8, 8))]
    peak = float(np.max(pixel_abs(grad_apply(u))))
    assert auto_gamma(pairs) == pytest.approx(GAMMA_REL * peak)


def test_build_learn_config_mappings(rng):
    g = rng.generator()
    u = g.random((16, 16)).astype(np.complex128)
    pairs = [TrainingPair(u_star=u, y=crandn(g, 16, 16))]

    cfg = ExperimentConfig()
    lc = build_learn_config(cfg, pairs)
    assert lc.rho.kind == "huber" and lc.rho.gamma > 0
    assert lc.op.kind == "gradient"
    assert lc.parametrization.kind == "free"
    assert not lc.fix_alpha

    cfg.gamma = "0.07"
    assert build_learn_config(cfg, pairs).rho.gamma == 0.07

    cfg.rho_kind = "zero"
    lc = build_learn_config(cfg, pairs)
    assert lc.fix_alpha and lc.alpha0 == 0.0

    cfg.rho_kind = "huber"
    cfg.gamma = "auto"
    cfg.parametrization = "lines-vertical"
    lc = build_learn_config(cfg, pairs)
    assert lc.parametrization.kind == "lines"
    assert lc.parametrization.axis == "vertical"

    cfg.operator = "wavelet"
    assert build_learn_config(cfg, pairs).op.kind == "wavelet"
