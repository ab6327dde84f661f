"""
Defines IdentityFeatures class, the unit-vector features of categorical inputs.
"""

import numpy as np
from scipy import sparse

from src.errors import ContractViolationError
from src.features.feature_map import FeatureMap, read_ids


def identity_features(i: int, n: int) -> np.ndarray:
    """
    Return the unit vector e_i of length n.
    """
    if not 0 <= i < n:
        raise ContractViolationError(f"Index {i} out of range [0, {n})")
    vector = np.zeros(n)
    vector[i] = 1.0
    return vector


class IdentityFeatures(FeatureMap):
    """
    Identity features phi(i) = e_i. Projecting through a factor is a row lookup and
    back-projecting is a scatter-add, so no feature matrix is ever built during training.

    Keyword arguments:
    n -- the number of categories
    column -- the input column holding the category ids
    """

    kind = "identity"

    def __init__(self, n: int, column: int = 0) -> None:
        super().__init__(n, (column,))

    @property
    def cardinality(self) -> int:
        return self.output_len

    def ids(self, inputs) -> np.ndarray:
        return read_ids(inputs, self.columns[0], self.output_len)

    def feature_matrix(self, inputs) -> sparse.csr_matrix:
        ids = self.ids(inputs)
        return sparse.csr_matrix(
            (np.ones(ids.size), (np.arange(ids.size), ids)), shape=(ids.size, self.output_len)
        )

    def project(self, inputs, factor: np.ndarray) -> np.ndarray:
        return factor[self.ids(inputs)]

    def backproject(self, inputs, coefficients: np.ndarray) -> np.ndarray:
        result = np.zeros((self.output_len, coefficients.shape[1]))
        np.add.at(result, self.ids(inputs), coefficients)
        return result
