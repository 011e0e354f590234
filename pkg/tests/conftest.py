"""Shared fixtures and finite-difference helpers for the test suite."""

import numpy as np
import pytest

from kspacelearn.core import Rng


@pytest.fixture
def rng():
    return Rng(20240817)


def crandn(gen, *shape):
    """Complex standard normal array from a numpy Generator."""
    return gen.standard_normal(shape) + 1j * gen.standard_normal(shape)


def central_fd(f, x, h):
    """Central finite difference of a scalar function of a real array,
    one entry per coordinate of x."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2.0 * h)
    return g
