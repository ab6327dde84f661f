"""
Defines TuckerWeights class, the core tensor and factor matrices of a Tucker model.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from lxml import etree

from src.errors import ContractViolationError
from src.services.xml_encoding import array_element
from src.tensors.dense_tensor import DenseTensor


class TuckerWeights:
    """
    The parameters of a Tucker model: a core W with extents r_1..r_D and one
    n_d x r_d factor matrix U^(d) per mode.

    Keyword arguments:
    core -- the core tensor
    factors -- the factor matrices, in mode order

    Attributes:
    core -- the core tensor
    factors -- the factor matrices
    """

    def __init__(self, core: DenseTensor, factors: Sequence[np.ndarray]) -> None:
        factors = [np.array(factor, dtype=float) for factor in factors]
        if core.order != len(factors):
            raise ContractViolationError(
                f"Core has {core.order} modes but {len(factors)} factors were given"
            )
        for mode, (extent, factor) in enumerate(zip(core.dims, factors)):
            if factor.ndim != 2 or factor.shape[1] != extent:
                raise ContractViolationError(
                    f"Factor {mode} has shape {factor.shape}, expected (n, {extent})"
                )
        self.core: DenseTensor = core
        self.factors: list[np.ndarray] = factors

    @property
    def order(self) -> int:
        return self.core.order

    @property
    def ranks(self) -> tuple[int, ...]:
        return self.core.dims

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(factor.shape[0] for factor in self.factors)

    @property
    def num_parameters(self) -> int:
        return self.core.data.size + sum(factor.size for factor in self.factors)

    def copy(self) -> TuckerWeights:
        return TuckerWeights(self.core.copy(), [factor.copy() for factor in self.factors])

    def flatten(self, include_core: bool = True, include_factors: bool = True) -> np.ndarray:
        """
        Return the selected parameters concatenated into one vector,
        the core first, then the factors in mode order, each in C order.
        """
        parts = []
        if include_core:
            parts.append(self.core.data)
        if include_factors:
            parts.extend(factor.ravel() for factor in self.factors)
        if not parts:
            return np.zeros(0)
        return np.concatenate(parts)

    def parameter_names(self, include_core: bool = True, include_factors: bool = True) -> list[str]:
        """
        Return the names of the entries of flatten(), "W[i,j,...]" and "U<d>[i,k]" with 1-based d.
        """
        names = []
        if include_core:
            names.extend(
                "W[" + ",".join(str(i) for i in index) + "]" for index in np.ndindex(*self.core.dims)
            )
        if include_factors:
            for mode, factor in enumerate(self.factors):
                names.extend(f"U{mode + 1}[{i},{k}]" for i, k in np.ndindex(*factor.shape))
        return names

    def save(self, tree_name: str) -> etree.Element:
        """
        Save the parameters in XML format.

        Return the result of this generation.

        Keyword arguments:
        tree_name -- the name that should be given to the root element of the generated XML.
        """
        tree = etree.Element(tree_name)
        tree.append(self.core.save("core"))
        factors = etree.SubElement(tree, "factors")
        for factor in self.factors:
            factors.append(array_element("factor", factor))
        return tree
