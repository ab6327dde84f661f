"""
Defines Periodic class, the kernel sigma_f^2 exp(-2 sin^2(pi |x - y| / p) / l^2).
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from lxml import etree
from scipy.spatial.distance import cdist

from src.kernels.kernel import Kernel, check_positive
from src.services.xml_encoding import format_float


class Periodic(Kernel):
    """
    A periodic kernel on the euclidean distance between active covariates.

    Keyword arguments:
    signal_var -- the signal variance
    lengthscale -- the lengthscale
    period -- the period p
    active_dims -- the columns read by the kernel
    """

    kind = "periodic"

    def __init__(
        self,
        signal_var: float = 1.0,
        lengthscale: float = 1.0,
        period: float = 1.0,
        active_dims: Sequence[int] | None = None,
    ) -> None:
        super().__init__(active_dims)
        check_positive("Signal variance", signal_var)
        check_positive("Lengthscale", lengthscale)
        check_positive("Period", period)
        self.signal_var: float = float(signal_var)
        self.lengthscale: float = float(lengthscale)
        self.period: float = float(period)

    @property
    def variance(self) -> float:
        return self.signal_var

    def _evaluate(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        distance = cdist(xs, ys, "euclidean")
        sine = np.sin(np.pi * distance / self.period)
        return self.signal_var * np.exp(-2.0 * sine**2 / self.lengthscale**2)

    def _save_parameters(self, tree: etree.Element) -> None:
        tree.set("signal_var", format_float(self.signal_var))
        tree.set("lengthscale", format_float(self.lengthscale))
        tree.set("period", format_float(self.period))
