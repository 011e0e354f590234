"""kspacelearn: bilevel learning of sparse k-space sampling patterns for
variational MRI reconstruction.

The lower-level reconstruction is solved by a linearly convergent
primal-dual algorithm, its solution map is differentiated implicitly via a
conjugate-gradient adjoint solve, and the sampling pattern and
regularization weight are optimized by a box-constrained limited-memory
quasi-Newton method.
"""

from . import (adjoint_grad, baselines, config, core, data_io, linops,
               lower_level, metrics, optim, regularizer, upper_level)

__all__ = [
    "adjoint_grad", "baselines", "config", "core", "data_io", "linops",
    "lower_level", "metrics", "optim", "regularizer", "upper_level",
]

__version__ = "0.1.0"
