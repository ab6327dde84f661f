"""
Defines FeatureMap class, the base class of all per-dimension feature maps phi_d.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from lxml import etree
from scipy import sparse

from src.errors import ContractViolationError
from src.services.xml_encoding import format_ints


def as_inputs(inputs) -> np.ndarray:
    """
    Return the given inputs as an N x P float matrix, a single vector being one input row.
    """
    array = np.asarray(inputs, dtype=float)
    if array.ndim == 0:
        return array.reshape(1, 1)
    if array.ndim == 1:
        return array.reshape(1, -1)
    if array.ndim != 2:
        raise ContractViolationError(f"Inputs must be a matrix, got shape {array.shape}")
    return array


def read_ids(inputs, column: int, cardinality: int) -> np.ndarray:
    """
    Return the integer category ids stored in one column of the inputs.

    Keyword arguments:
    inputs -- the N x P inputs
    column -- the column holding the ids
    cardinality -- the number of categories, ids must lie in [0, cardinality)
    """
    inputs = as_inputs(inputs)
    if column >= inputs.shape[1]:
        raise ContractViolationError(f"Column {column} missing from inputs with {inputs.shape[1]} columns")
    values = inputs[:, column]
    ids = values.astype(np.int64)
    if np.any(ids != values) or np.any(ids < 0) or np.any(ids >= cardinality):
        bad = values[(ids != values) | (ids < 0) | (ids >= cardinality)][0]
        raise ContractViolationError(f"Index {bad} out of range [0, {cardinality})")
    return ids


class FeatureMap:
    """
    A FeatureMap sends the covariates of an input to a finite feature vector phi(x)
    such that phi(x)^T phi(y) equals (or approximates) a kernel k(x, y).

    Keyword arguments:
    output_len -- the length of the feature vectors
    columns -- the input columns read by the map

    Attributes:
    output_len -- the length of the feature vectors, i.e. the row count of the matching factor
    columns -- the input columns read by the map
    """

    kind: str = ""

    def __init__(self, output_len: int, columns: Sequence[int]) -> None:
        if output_len < 1:
            raise ContractViolationError(f"Feature length must be positive, got {output_len}")
        self.output_len: int = int(output_len)
        self.columns: tuple[int, ...] = tuple(int(column) for column in columns)

    def select(self, inputs) -> np.ndarray:
        inputs = as_inputs(inputs)
        if self.columns and max(self.columns) >= inputs.shape[1]:
            raise ContractViolationError(
                f"{self.kind} features read columns {self.columns} "
                f"but inputs only have {inputs.shape[1]}"
            )
        return inputs[:, self.columns]

    def feature_matrix(self, inputs) -> np.ndarray | sparse.csr_matrix:
        """
        Return the N x output_len matrix whose rows are the feature vectors of the inputs.

        Keyword arguments:
        inputs -- the N x P inputs
        """
        raise NotImplementedError

    def features(self, x) -> np.ndarray:
        """
        Return the feature vector of a single input.
        """
        matrix = self.feature_matrix(as_inputs(x)[:1])
        if sparse.issparse(matrix):
            matrix = matrix.toarray()
        return np.asarray(matrix)[0]

    def project(self, inputs, factor: np.ndarray) -> np.ndarray:
        """
        Return the N x r matrix whose row i is U^T phi(x_i).

        Keyword arguments:
        inputs -- the N x P inputs
        factor -- the output_len x r factor U
        """
        return np.asarray(self.feature_matrix(inputs) @ factor)

    def backproject(self, inputs, coefficients: np.ndarray) -> np.ndarray:
        """
        Return the output_len x r matrix sum_i phi(x_i) c_i^T.

        Keyword arguments:
        inputs -- the N x P inputs
        coefficients -- the N x r matrix of row coefficients c_i
        """
        return np.asarray(self.feature_matrix(inputs).T @ coefficients)

    def save(self, tree_name: str = "feature_map") -> etree.Element:
        """
        Save the feature map in XML format.

        Return the result of this generation.

        Keyword arguments:
        tree_name -- the name that should be given to the root element of the generated XML.
        """
        tree = etree.Element(tree_name)
        tree.set("type", self.kind)
        tree.set("output_len", str(self.output_len))
        tree.set("columns", format_ints(self.columns))
        self._save_state(tree)
        return tree

    def _save_state(self, tree: etree.Element) -> None:
        pass
