import numpy as np
import pytest

from conftest import crandn
from kspacelearn.baselines import (baseline_pattern, greedy_lines,
                                   kde_pattern, kspace_radius)
from kspacelearn.core import Rng
from kspacelearn.errors import (ConfigError, DegeneratePatternError,
                                DomainError)
from kspacelearn.linops import gradient_op
from kspacelearn.regularizer import RhoSpec
from kspacelearn.upper_level import LearnConfig, Parametrization, TrainingPair


def test_kspace_radius_layout():
    r = kspace_radius((8, 8))
    assert r[0, 0] == 0.0
    assert r[4, 0] == 4.0 and r[0, 4] == 4.0
    assert r[1, 0] == r[-1, 0] == 1.0  # symmetric in the unshifted layout


def test_uniform_random_count(rng):
    pv = baseline_pattern("uniform-random", (16, 16), rng, 0.25)
    assert pv.weights.sum() == round(0.25 * 256)
    assert set(np.unique(pv.weights)) <= {0.0, 1.0}
    assert pv.alpha == 0.0


def test_variable_density_count_dc_and_concentration():
    rng = Rng(11)
    pv = baseline_pattern("variable-density", (32, 32), rng.substream(0), 0.2)
    assert pv.weights.sum() == round(0.2 * 1024)
    assert pv.weights[0, 0] == 1.0  # DC always sampled
    # low frequencies should be denser than high ones on average
    r = kspace_radius((32, 32))
    low = pv.weights[r <= 4].mean()
    high = pv.weights[r >= 12].mean()
    assert low > high


def test_low_pass_is_smallest_centered_disk(rng):
    pv = baseline_pattern("low-pass", (16, 16), rng, 0.3)
    r = kspace_radius((16, 16))
    assert pv.weights.sum() == round(0.3 * 256)
    assert np.max(r[pv.weights == 1.0]) <= np.min(r[pv.weights == 0.0])


@pytest.mark.parametrize("axis,expect_axis", [("vertical", 0), ("horizontal", 1)])
def test_random_lines_structure(axis, expect_axis, rng):
    pv = baseline_pattern("random-lines", (16, 16), rng, 0.25, axis=axis)
    w = pv.weights
    line_sums = w.sum(axis=expect_axis)
    assert set(np.unique(line_sums)) <= {0.0, 16.0}
    assert np.count_nonzero(line_sums) == round(0.25 * 16)


def test_baseline_pattern_validation(rng):
    with pytest.raises(DomainError):
        baseline_pattern("uniform-random", (8, 8), rng, 0.0)
    with pytest.raises(ConfigError):
        baseline_pattern("bogus", (8, 8), rng, 0.5)


def test_baseline_pattern_deterministic():
    a = baseline_pattern("uniform-random", (16, 16), Rng(3).substream(1), 0.3)
    b = baseline_pattern("uniform-random", (16, 16), Rng(3).substream(1), 0.3)
    assert np.array_equal(a.weights, b.weights)


def test_kde_normalization_and_oracle(rng):
    g = rng.generator()
    w = (g.random((16, 16)) < 0.3).astype(np.float64)
    bw = 1.5
    out = kde_pattern(w, bw)
    assert abs(out.sum() - 1.0) < 1e-12
    # direct O(n^2) truncated-Gaussian convolution oracle
    r = int(np.ceil(4 * bw))
    direct = np.zeros((16, 16))
    for i in range(16):
        for j in range(16):
            acc = 0.0
            for di in range(-r, r + 1):
                for dj in range(-r, r + 1):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < 16 and 0 <= jj < 16:
                        acc += w[ii, jj] * np.exp(-(di * di + dj * dj) / (2 * bw * bw))
            direct[i, j] = acc
    direct /= direct.sum()
    assert np.max(np.abs(out - direct)) < 1e-10


def test_kde_errors(rng):
    with pytest.raises(DegeneratePatternError):
        kde_pattern(np.zeros((8, 8)), 2.0)
    with pytest.raises(DomainError):
        kde_pattern(np.ones((8, 8)), 0.0)


def _tiny_cfg(shape):
    return LearnConfig(beta=0.0, rho=RhoSpec("huber", 0.05), op=gradient_op(),
                       eps=1e-2, pdhg_tol=1e-6, pdhg_maxit=5000, cg_tol=1e-6,
                       maxiter=15, pgtol=1e-3,
                       parametrization=Parametrization(kind="free", shape=shape))


def test_greedy_lines_selects_budget_and_improves(rng):
    g = rng.generator()
    u = g.random((8, 8)).astype(np.complex128)
    y = np.fft.fft2(u, norm="ortho") + 0.01 * crandn(g, 8, 8)
    pairs = [TrainingPair(u_star=u, y=y)]
    cfg = _tiny_cfg((8, 8))
    pv, trace = greedy_lines(pairs, cfg, rate=0.25, axis="vertical",
                             return_trace=True)
    cols = pv.weights.sum(axis=0)
    assert np.count_nonzero(cols) == 2
    assert set(np.unique(pv.weights)) <= {0.0, 1.0}
    assert pv.alpha >= 0.0
    assert len(trace) == 2
    # adding a line never hurts the greedy criterion
    assert trace[1][1] >= trace[0][1] - 1e-9
    # DC column carries the most energy; greedy should grab it first
    assert trace[0][0] == 0


def test_greedy_lines_zero_budget(rng):
    g = rng.generator()
    u = g.random((8, 8)).astype(np.complex128)
    pairs = [TrainingPair(u_star=u, y=np.fft.fft2(u, norm="ortho"))]
    with pytest.raises(DegeneratePatternError):
        greedy_lines(pairs, _tiny_cfg((8, 8)), rate=0.01)
