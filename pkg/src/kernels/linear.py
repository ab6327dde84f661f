"""
Defines Linear class, the inner product kernel on caller-supplied side vectors.
"""

import numpy as np

from src.kernels.kernel import Kernel


class Linear(Kernel):
    """
    A Linear kernel evaluates omega(x)^T omega(y), where omega(x) are the active covariates
    of x. The encoding of side vectors into covariates is the caller's business.
    """

    kind = "linear"

    def _evaluate(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return xs @ ys.T
