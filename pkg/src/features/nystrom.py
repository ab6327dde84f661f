"""
Defines NystromFeatures class: phi(x) = L_nn^-1 k(inducing, x), with K_nn = L_nn L_nn^T.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from lxml import etree
from scipy import linalg

from src.features.cholesky_grid import jittered_cholesky
from src.features.feature_map import FeatureMap
from src.kernels.kernel import Kernel, as_points, gram
from src.services.xml_encoding import array_element


class NystromFeatures(FeatureMap):
    """
    Nystrom features on a set of inducing points. Feature dot products reproduce
    K_Nn K_nn^-1 K_Nn^T, exactly on the inducing points themselves.

    Keyword arguments:
    inducing -- the n x p inducing points
    kernel -- the approximated kernel
    factor -- the lower Cholesky factor of the inducing gram
    columns -- the input columns holding the p covariates
    """

    kind = "nystrom"

    def __init__(self, inducing: np.ndarray, kernel: Kernel, factor: np.ndarray, columns: Sequence[int]) -> None:
        super().__init__(factor.shape[0], columns)
        self.inducing: np.ndarray = as_points(inducing)
        self.kernel: Kernel = kernel
        self.factor: np.ndarray = factor

    def feature_matrix(self, inputs) -> np.ndarray:
        cross = self.kernel.cross_gram(self.inducing, self.select(inputs))
        return linalg.solve_triangular(self.factor, cross, lower=True).T

    def _save_state(self, tree: etree.Element) -> None:
        tree.append(array_element("inducing", self.inducing))
        tree.append(self.kernel.save("kernel"))
        tree.append(array_element("factor", self.factor))


def build_nystrom(kernel: Kernel, inducing, columns: Sequence[int] | None = None) -> NystromFeatures:
    """
    Return the Nystrom features of a kernel on the given inducing points.

    Keyword arguments:
    kernel -- the kernel to approximate
    inducing -- the n x p inducing points
    columns -- the input columns holding the p covariates, 0..p-1 by default
    """
    inducing = as_points(inducing)
    columns = tuple(range(inducing.shape[1])) if columns is None else tuple(columns)
    return NystromFeatures(inducing, kernel, jittered_cholesky(gram(kernel, inducing)), columns)
