"""
Defines Sum and Product classes, the kernels combining other kernels.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from lxml import etree

from src.errors import ContractViolationError
from src.kernels.kernel import Kernel
from src.services.xml_encoding import format_float


class Sum(Kernel):
    """
    A weighted sum of kernels, sum_k scale_k^2 k_k(x, y).
    Children read their own active dimensions from the full points.

    Keyword arguments:
    kernels -- the summed kernels
    scales -- one non-negative scale per kernel, squared when evaluated, ones by default

    Attributes:
    kernels -- the summed kernels
    scales -- the scales of the kernels
    """

    kind = "sum"

    def __init__(self, kernels: Sequence[Kernel], scales: Sequence[float] | None = None) -> None:
        super().__init__(None)
        if not kernels:
            raise ContractViolationError("A sum kernel needs at least one kernel")
        scales = [1.0] * len(kernels) if scales is None else [float(scale) for scale in scales]
        if len(scales) != len(kernels):
            raise ContractViolationError(f"{len(scales)} scales for {len(kernels)} kernels")
        if any(not np.isfinite(scale) or scale < 0 for scale in scales):
            raise ContractViolationError(f"Sum scales must be non-negative, got {scales}")
        self.kernels: list[Kernel] = list(kernels)
        self.scales: list[float] = scales

    @property
    def variance(self) -> float:
        return sum(scale**2 * kernel.variance for scale, kernel in zip(self.scales, self.kernels))

    def cross_gram(self, xs, ys) -> np.ndarray:
        return sum(
            scale**2 * kernel.cross_gram(xs, ys) for scale, kernel in zip(self.scales, self.kernels)
        )

    def _save_parameters(self, tree: etree.Element) -> None:
        tree.set("scales", ",".join(format_float(scale) for scale in self.scales))
        for kernel in self.kernels:
            tree.append(kernel.save("kernel"))


class Product(Kernel):
    """
    The product of kernels, the construction behind Kronecker-structured grams on grids.

    Keyword arguments:
    kernels -- the multiplied kernels
    """

    kind = "product"

    def __init__(self, kernels: Sequence[Kernel]) -> None:
        super().__init__(None)
        if not kernels:
            raise ContractViolationError("A product kernel needs at least one kernel")
        self.kernels: list[Kernel] = list(kernels)

    @property
    def variance(self) -> float:
        return float(np.prod([kernel.variance for kernel in self.kernels]))

    def cross_gram(self, xs, ys) -> np.ndarray:
        result = self.kernels[0].cross_gram(xs, ys)
        for kernel in self.kernels[1:]:
            result = result * kernel.cross_gram(xs, ys)
        return result

    def _save_parameters(self, tree: etree.Element) -> None:
        for kernel in self.kernels:
            tree.append(kernel.save("kernel"))
