"""
Defines Delta class, the identity kernel on categorical ids.
"""

import numpy as np

from src.kernels.kernel import Kernel


class Delta(Kernel):
    """
    A Delta kernel is 1 when two points carry the same ids on every active covariate, 0 otherwise.
    """

    kind = "delta"

    @property
    def variance(self) -> float:
        return 1.0

    def _evaluate(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return np.all(xs[:, np.newaxis, :] == ys[np.newaxis, :, :], axis=2).astype(float)
