"""
Defines SideAugmentedFeatures class, identity features extended with side information:
phi(i) = [a e_i^T, b omega(i)^T]^T, so that phi(i)^T phi(i') = a^2 delta_ii' + b^2 omega(i)^T omega(i').
"""

from __future__ import annotations

import numpy as np
from lxml import etree
from scipy import sparse

from src.errors import ContractViolationError
from src.features.feature_map import FeatureMap, read_ids
from src.services.xml_encoding import array_element, format_float


def _check_weights(a: float, b: float) -> None:
    if a < 0 or b < 0:
        raise ContractViolationError(f"Side-information weights must be non-negative, got a={a}, b={b}")


def augment_side_info(i: int, n: int, omega: np.ndarray, a: float, b: float) -> np.ndarray:
    """
    Return the concatenation of a e_i (length n) and b omega.

    Keyword arguments:
    i -- the category index
    n -- the number of categories
    omega -- the side vector of category i
    a -- the weight of the identity part
    b -- the weight of the side part
    """
    _check_weights(a, b)
    if not 0 <= i < n:
        raise ContractViolationError(f"Index {i} out of range [0, {n})")
    head = np.zeros(n)
    head[i] = a
    return np.concatenate([head, b * np.asarray(omega, dtype=float)])


class SideAugmentedFeatures(FeatureMap):
    """
    Side-augmented features of a categorical input. The matching factor has n + s rows:
    the rows of the categories followed by one row per side feature.

    Keyword arguments:
    side_vectors -- the n x s binary side vectors, one row per category
    a -- the weight of the identity part
    b -- the weight of the side part
    column -- the input column holding the category ids

    Attributes:
    side_vectors -- the side vectors as a sparse matrix
    a -- the weight of the identity part
    b -- the weight of the side part
    """

    kind = "side"

    def __init__(self, side_vectors, a: float, b: float, column: int = 0) -> None:
        _check_weights(a, b)
        side_vectors = sparse.csr_matrix(side_vectors, dtype=float)
        super().__init__(side_vectors.shape[0] + side_vectors.shape[1], (column,))
        self.side_vectors: sparse.csr_matrix = side_vectors
        self.a: float = float(a)
        self.b: float = float(b)

    @property
    def cardinality(self) -> int:
        return self.side_vectors.shape[0]

    @property
    def side_len(self) -> int:
        return self.side_vectors.shape[1]

    def ids(self, inputs) -> np.ndarray:
        return read_ids(inputs, self.columns[0], self.cardinality)

    def index_set(self, i: int) -> np.ndarray:
        """
        Return the positions of the non-zero side features of category i.
        """
        row = self.side_vectors.getrow(i)
        return row.indices[row.data != 0]

    def feature_matrix(self, inputs) -> sparse.csr_matrix:
        ids = self.ids(inputs)
        head = sparse.csr_matrix(
            (np.full(ids.size, self.a), (np.arange(ids.size), ids)), shape=(ids.size, self.cardinality)
        )
        return sparse.hstack([head, self.b * self.side_vectors[ids]], format="csr")

    def project(self, inputs, factor: np.ndarray) -> np.ndarray:
        ids = self.ids(inputs)
        return self.a * factor[ids] + self.b * np.asarray(self.side_vectors[ids] @ factor[self.cardinality :])

    def backproject(self, inputs, coefficients: np.ndarray) -> np.ndarray:
        ids = self.ids(inputs)
        head = np.zeros((self.cardinality, coefficients.shape[1]))
        np.add.at(head, ids, self.a * coefficients)
        tail = self.b * np.asarray(self.side_vectors[ids].T @ coefficients)
        return np.vstack([head, tail])

    def _save_state(self, tree: etree.Element) -> None:
        tree.set("a", format_float(self.a))
        tree.set("b", format_float(self.b))
        tree.append(array_element("side_vectors", self.side_vectors.toarray()))
