"""
Defines CholeskyGridFeatures class, the exact features of inputs lying on a grid:
the feature of grid point i on an axis is row i of the Cholesky factor of the axis gram.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
from lxml import etree
from scipy import linalg

from src.constants import CHOLESKY_MAX_POINTS, JITTER_DOUBLINGS, JITTER_RELATIVE
from src.errors import ContractViolationError, IllConditionedKernelError, SizeLimitError
from src.features.feature_map import FeatureMap, read_ids
from src.kernels.kernel import Kernel, as_points, gram
from src.services.xml_encoding import array_element

logger = logging.getLogger(__name__)


def jittered_cholesky(matrix: np.ndarray) -> np.ndarray:
    """
    Return the lower Cholesky factor of a gram matrix after adding a jitter of
    1e-9 times its mean diagonal, doubling the jitter up to 6 times on failure.

    Keyword arguments:
    matrix -- the symmetric positive semi-definite matrix to factorise
    """
    base = JITTER_RELATIVE * max(float(np.mean(np.diag(matrix))), np.finfo(float).tiny)
    identity = np.eye(matrix.shape[0])
    for doubling in range(JITTER_DOUBLINGS + 1):
        jitter = base * 2**doubling
        try:
            return linalg.cholesky(matrix + jitter * identity, lower=True)
        except linalg.LinAlgError:
            logger.warning("Cholesky failed with jitter %.3g, doubling it", jitter)
    raise IllConditionedKernelError(
        f"Gram matrix of size {matrix.shape[0]} is not positive definite "
        f"even with jitter {base * 2**JITTER_DOUBLINGS:.3g}"
    )


class CholeskyGridFeatures(FeatureMap):
    """
    Cholesky features of one grid axis. The input column read by the map holds the
    index of the row's point on the axis.

    Keyword arguments:
    axis_points -- the n x p sorted points of the axis
    kernel -- the kernel of the axis
    factor -- the lower Cholesky factor L of the axis gram, K = L L^T
    column -- the input column holding the axis index

    Attributes:
    axis_points -- the points of the axis
    kernel -- the kernel of the axis
    factor -- the Cholesky factor
    """

    kind = "cholesky"

    def __init__(self, axis_points: np.ndarray, kernel: Kernel, factor: np.ndarray, column: int = 0) -> None:
        super().__init__(factor.shape[0], (column,))
        self.axis_points: np.ndarray = as_points(axis_points)
        self.kernel: Kernel = kernel
        self.factor: np.ndarray = factor

    def ids(self, inputs) -> np.ndarray:
        return read_ids(inputs, self.columns[0], self.output_len)

    def feature_matrix(self, inputs) -> np.ndarray:
        return self.factor[self.ids(inputs)]

    def project(self, inputs, factor: np.ndarray) -> np.ndarray:
        return (self.factor @ factor)[self.ids(inputs)]

    def backproject(self, inputs, coefficients: np.ndarray) -> np.ndarray:
        scattered = np.zeros((self.output_len, coefficients.shape[1]))
        np.add.at(scattered, self.ids(inputs), coefficients)
        return self.factor.T @ scattered

    def _save_state(self, tree: etree.Element) -> None:
        tree.append(array_element("axis_points", self.axis_points))
        tree.append(self.kernel.save("kernel"))
        tree.append(array_element("factor", self.factor))


def build_cholesky_features(
    axis_points: Sequence[np.ndarray],
    axis_kernels: Sequence[Kernel],
    columns: Sequence[int] | None = None,
    limit: int = CHOLESKY_MAX_POINTS,
) -> list[CholeskyGridFeatures]:
    """
    Return one Cholesky feature map per grid axis.
    The product of the axis grams is the gram of the whole grid, so the Kronecker
    product of the axis features reproduces it exactly.

    Keyword arguments:
    axis_points -- the points of every axis
    axis_kernels -- the kernel of every axis
    columns -- the input column holding the index on every axis, 0..D-1 by default
    limit -- the maximal number of points on an axis
    """
    if len(axis_points) != len(axis_kernels):
        raise ContractViolationError(
            f"{len(axis_points)} axes but {len(axis_kernels)} kernels"
        )
    columns = tuple(range(len(axis_points))) if columns is None else tuple(columns)
    maps = []
    for points, kernel, column in zip(axis_points, axis_kernels, columns):
        points = as_points(points)
        if points.shape[0] > limit:
            raise SizeLimitError(f"Axis of {points.shape[0]} points exceeds the limit of {limit}")
        factor = jittered_cholesky(gram(kernel, points))
        maps.append(CholeskyGridFeatures(points, kernel, factor, column))
    return maps
