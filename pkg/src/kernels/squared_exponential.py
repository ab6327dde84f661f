"""
Defines SquaredExponential class, the stationary kernel sigma_f^2 exp(-|x - y|^2 / 2l^2).
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from lxml import etree
from scipy.spatial.distance import cdist

from src.errors import KernelSignatureError
from src.kernels.kernel import Kernel, check_positive
from src.services.xml_encoding import format_float


class SquaredExponential(Kernel):
    """
    A squared-exponential kernel with either one isotropic lengthscale
    or one lengthscale per active covariate.

    Keyword arguments:
    signal_var -- the signal variance sigma_f^2
    lengthscales -- a single lengthscale or one per active covariate
    active_dims -- the columns read by the kernel

    Attributes:
    signal_var -- the signal variance
    lengthscales -- the lengthscales as an array, of length 1 when isotropic
    """

    kind = "se"

    def __init__(
        self,
        signal_var: float = 1.0,
        lengthscales: float | Sequence[float] = 1.0,
        active_dims: Sequence[int] | None = None,
    ) -> None:
        super().__init__(active_dims)
        self.lengthscales: np.ndarray = np.atleast_1d(np.asarray(lengthscales, dtype=float))
        check_positive("Signal variance", signal_var)
        check_positive("Lengthscale", *self.lengthscales)
        if (
            self.active_dims is not None
            and self.lengthscales.size > 1
            and self.lengthscales.size != len(self.active_dims)
        ):
            raise KernelSignatureError(
                f"{self.lengthscales.size} lengthscales for {len(self.active_dims)} active covariates"
            )
        self.signal_var: float = float(signal_var)

    @property
    def isotropic(self) -> bool:
        return self.lengthscales.size == 1

    @property
    def signal_std(self) -> float:
        return float(np.sqrt(self.signal_var))

    @property
    def variance(self) -> float:
        return self.signal_var

    def input_dim(self) -> int | None:
        if self.active_dims is not None:
            return len(self.active_dims)
        return None if self.isotropic else self.lengthscales.size

    def _evaluate(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        if not self.isotropic and xs.shape[1] != self.lengthscales.size:
            raise KernelSignatureError(
                f"{self.lengthscales.size} lengthscales for points with {xs.shape[1]} covariates"
            )
        squared = cdist(xs / self.lengthscales, ys / self.lengthscales, "sqeuclidean")
        return self.signal_var * np.exp(-0.5 * squared)

    def _save_parameters(self, tree: etree.Element) -> None:
        tree.set("signal_var", format_float(self.signal_var))
        tree.set("lengthscales", ",".join(format_float(value) for value in self.lengthscales))
