"""
Defines Kernel class, the base class of every covariance function,
and the kernel_eval and gram entry points shared by all of them.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from lxml import etree

from src.errors import ContractViolationError, KernelSignatureError
from src.services.xml_encoding import format_ints


def as_points(points) -> np.ndarray:
    """
    Return the given points as an N x P float matrix.
    A flat sequence is read as N points with a single covariate.
    """
    array = np.asarray(points, dtype=float)
    if array.ndim == 0:
        return array.reshape(1, 1)
    if array.ndim == 1:
        return array.reshape(-1, 1)
    if array.ndim != 2:
        raise KernelSignatureError(f"Points must be a matrix, got shape {array.shape}")
    return array


def check_positive(name: str, *values: float) -> None:
    for value in values:
        if not np.isfinite(value) or value <= 0:
            raise ContractViolationError(f"{name} must be strictly positive, got {value}")


class Kernel:
    """
    The Kernel class is the base class of every covariance function.
    A kernel reads the covariates listed in its active dimensions from every input point.

    Keyword arguments:
    active_dims -- the columns of the input points read by the kernel, all of them if None

    Attributes:
    active_dims -- the columns of the input points read by the kernel
    """

    kind: str = ""

    def __init__(self, active_dims: Sequence[int] | None = None) -> None:
        self.active_dims: tuple[int, ...] | None = (
            tuple(int(column) for column in active_dims) if active_dims is not None else None
        )

    def select(self, points) -> np.ndarray:
        """
        Return the active covariates of the given points.

        Keyword arguments:
        points -- the N x P input points
        """
        points = as_points(points)
        if self.active_dims is None:
            return points
        if max(self.active_dims) >= points.shape[1]:
            raise KernelSignatureError(
                f"{self.kind} kernel reads columns {self.active_dims} "
                f"but points only have {points.shape[1]}"
            )
        return points[:, self.active_dims]

    def input_dim(self) -> int | None:
        """
        Return the number of covariates the kernel needs, None when any number fits.
        """
        return len(self.active_dims) if self.active_dims is not None else None

    def cross_gram(self, xs, ys) -> np.ndarray:
        """
        Return the matrix of kernel values between every point of xs and every point of ys.

        Keyword arguments:
        xs -- the N x P first points
        ys -- the M x P second points
        """
        xs, ys = as_points(xs), as_points(ys)
        if xs.shape[1] != ys.shape[1]:
            raise KernelSignatureError(
                f"Points with {xs.shape[1]} and {ys.shape[1]} covariates cannot be compared"
            )
        return self._evaluate(self.select(xs), self.select(ys))

    def _evaluate(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def variance(self) -> float:
        """
        Return the value of the kernel at zero distance for stationary kernels.
        """
        raise NotImplementedError

    def save(self, tree_name: str = "kernel") -> etree.Element:
        """
        Save the kernel in XML format.

        Return the result of this generation.

        Keyword arguments:
        tree_name -- the name that should be given to the root element of the generated XML.
        """
        tree = etree.Element(tree_name)
        tree.set("type", self.kind)
        if self.active_dims is not None:
            tree.set("active_dims", format_ints(self.active_dims))
        self._save_parameters(tree)
        return tree

    def _save_parameters(self, tree: etree.Element) -> None:
        pass

    def __repr__(self) -> str:
        return f"{type(self).__name__}(active_dims={self.active_dims})"


def kernel_eval(kernel: Kernel, x, y) -> float:
    """
    Return k(x, y) for two single input points.

    Keyword arguments:
    kernel -- the kernel to evaluate
    x -- the first point, a scalar or a vector of covariates
    y -- the second point
    """
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    y = np.atleast_1d(np.asarray(y, dtype=float)).reshape(1, -1)
    return float(kernel.cross_gram(x, y)[0, 0])


def gram(kernel: Kernel, points) -> np.ndarray:
    """
    Return the symmetric matrix of kernel values between all pairs of points.

    Keyword arguments:
    kernel -- the kernel to evaluate
    points -- the nonempty N x P input points
    """
    points = as_points(points)
    if points.shape[0] == 0:
        raise ContractViolationError("Gram matrix of an empty point set")
    matrix = kernel.cross_gram(points, points)
    return 0.5 * (matrix + matrix.T)
