"""
Defines HashedFeatures class and the hashing trick reducing a feature vector to m entries:
phi_bar_j(x) = sum_{i : h(i) = j} xi(i) phi_i(x).
"""

from __future__ import annotations

import numpy as np
from lxml import etree
from scipy import sparse

from src.errors import ContractViolationError
from src.features.feature_map import FeatureMap

_GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)


def mix64(values: np.ndarray) -> np.ndarray:
    """
    Return the splitmix64 finaliser of every value, wrapping modulo 2^64.
    """
    z = np.asarray(values, dtype=np.uint64) + _GOLDEN_GAMMA
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def hash_tables(n: int, m: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Return the bucket h(i) in [0, m) and the sign xi(i) in {-1, +1} of every index i < n.

    Keyword arguments:
    n -- the length of the hashed vectors
    m -- the number of buckets
    seed -- the seed fixing both hash functions
    """
    if m < 1:
        raise ContractViolationError(f"Hashed feature length must be at least 1, got {m}")
    keys = mix64(np.array([2 * seed, 2 * seed + 1], dtype=np.uint64))
    indices = np.arange(n, dtype=np.uint64)
    buckets = (mix64(indices ^ keys[0]) % np.uint64(m)).astype(np.int64)
    signs = np.where(mix64(indices ^ keys[1]) >> np.uint64(63), -1.0, 1.0)
    return buckets, signs


def hash_features(base_vec: np.ndarray, m: int, seed: int) -> np.ndarray:
    """
    Return the hashed version of a feature vector, of length m.

    Keyword arguments:
    base_vec -- the feature vector to hash
    m -- the output length
    seed -- the seed fixing the hash functions
    """
    base_vec = np.asarray(base_vec, dtype=float)
    buckets, signs = hash_tables(base_vec.size, m, seed)
    return np.bincount(buckets, weights=signs * base_vec, minlength=m)


class HashedFeatures(FeatureMap):
    """
    Hashed features wrapping any base map.

    Keyword arguments:
    base -- the wrapped feature map
    m -- the output length
    seed -- the seed fixing the hash functions

    Attributes:
    base -- the wrapped feature map
    seed -- the hash seed
    projection -- the sparse base.output_len x m matrix with entry xi(i) at (i, h(i))
    """

    kind = "hashed"

    def __init__(self, base: FeatureMap, m: int, seed: int) -> None:
        super().__init__(m, base.columns)
        self.base: FeatureMap = base
        self.seed: int = int(seed)
        buckets, signs = hash_tables(base.output_len, m, seed)
        self.projection: sparse.csr_matrix = sparse.csr_matrix(
            (signs, (np.arange(base.output_len), buckets)), shape=(base.output_len, m)
        )

    def feature_matrix(self, inputs) -> sparse.csr_matrix:
        return sparse.csr_matrix(self.base.feature_matrix(inputs)) @ self.projection

    def project(self, inputs, factor: np.ndarray) -> np.ndarray:
        return self.base.project(inputs, np.asarray(self.projection @ factor))

    def backproject(self, inputs, coefficients: np.ndarray) -> np.ndarray:
        return np.asarray(self.projection.T @ self.base.backproject(inputs, coefficients))

    def _save_state(self, tree: etree.Element) -> None:
        tree.set("seed", str(self.seed))
        tree.append(self.base.save("base"))
