"""
Defines DenseTensor class, the storage of the Tucker core and of full-rank weight tensors.
"""

from __future__ import annotations

from collections.abc import Sequence
from math import prod

import numpy as np
from lxml import etree

from src.errors import ContractViolationError
from src.services.xml_encoding import array_element


class DenseTensor:
    """
    A DenseTensor is a D-way real array stored flat with the last index varying fastest.

    Keyword arguments:
    dims -- the positive extent of every mode
    data -- the entries, flat, of length equal to the product of the extents

    Attributes:
    dims -- the extent of every mode
    data -- the flat entries in C order
    """

    def __init__(self, dims: Sequence[int], data: np.ndarray) -> None:
        dims = tuple(int(extent) for extent in dims)
        if len(dims) < 1 or any(extent < 1 for extent in dims):
            raise ContractViolationError(f"Invalid tensor extents: {dims}")
        data = np.ascontiguousarray(data, dtype=float).ravel()
        if data.size != prod(dims):
            raise ContractViolationError(
                f"Tensor of extents {dims} needs {prod(dims)} entries, got {data.size}"
            )
        self.dims: tuple[int, ...] = dims
        self.data: np.ndarray = data

    @classmethod
    def from_array(cls, array: np.ndarray) -> DenseTensor:
        array = np.asarray(array, dtype=float)
        return cls(array.shape, array.ravel())

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> DenseTensor:
        return cls(dims, np.zeros(prod(dims)))

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def array(self) -> np.ndarray:
        """
        Return a writable view of the entries shaped by the extents.
        """
        return self.data.reshape(self.dims)

    def copy(self) -> DenseTensor:
        return DenseTensor(self.dims, self.data.copy())

    def __getitem__(self, multi_index: tuple[int, ...]) -> float:
        return float(self.array[multi_index])

    def save(self, tree_name: str) -> etree.Element:
        """
        Save the tensor in XML format.

        Return the result of this generation.

        Keyword arguments:
        tree_name -- the name that should be given to the root element of the generated XML.
        """
        return array_element(tree_name, self.array)
