"""
Defines RatingsData and SideInfo classes, the observed (user, item, rating) triples
and the binary side information of users and items.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from src.datasets import RegressionDataset
from src.errors import ContractViolationError


@dataclass(frozen=True)
class RatingsData:
    """
    Observed entries of a partially observed n_users x n_items rating matrix, 0-based.

    Attributes:
    n_users -- the number of users n_1
    n_items -- the number of items n_2
    users -- the user index of every triple
    items -- the item index of every triple
    ratings -- the rating of every triple
    """

    n_users: int
    n_items: int
    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray

    def __post_init__(self) -> None:
        users = np.asarray(self.users, dtype=np.int64).ravel()
        items = np.asarray(self.items, dtype=np.int64).ravel()
        ratings = np.asarray(self.ratings, dtype=float).ravel()
        if self.n_users < 1 or self.n_items < 1:
            raise ContractViolationError(f"Invalid matrix size {self.n_users} x {self.n_items}")
        if not users.size == items.size == ratings.size:
            raise ContractViolationError("Users, items and ratings must have the same length")
        if users.size and (users.min() < 0 or users.max() >= self.n_users):
            raise ContractViolationError(f"User index out of range [0, {self.n_users})")
        if items.size and (items.min() < 0 or items.max() >= self.n_items):
            raise ContractViolationError(f"Item index out of range [0, {self.n_items})")
        if not np.all(np.isfinite(ratings)):
            raise ContractViolationError("Ratings must be finite")
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "ratings", ratings)

    @classmethod
    def from_triples(cls, n_users: int, n_items: int, triples: Iterable[tuple[int, int, float]]) -> RatingsData:
        triples = list(triples)
        if not triples:
            return cls(n_users, n_items, np.zeros(0), np.zeros(0), np.zeros(0))
        users, items, ratings = zip(*triples)
        return cls(n_users, n_items, np.array(users), np.array(items), np.array(ratings))

    def __len__(self) -> int:
        return self.ratings.size

    def triples(self) -> list[tuple[int, int, float]]:
        return list(zip(self.users.tolist(), self.items.tolist(), self.ratings.tolist()))

    def subset(self, rows) -> RatingsData:
        return RatingsData(self.n_users, self.n_items, self.users[rows], self.items[rows], self.ratings[rows])

    @property
    def mean_rating(self) -> float:
        return float(np.mean(self.ratings)) if len(self) else 0.0

    def to_dataset(self, offset: float = 0.0) -> RegressionDataset:
        """
        Return the triples as regression data: inputs (user, item), targets rating - offset.
        """
        inputs = np.column_stack([self.users, self.items]).astype(float)
        return RegressionDataset(inputs, self.ratings - offset, ("user", "item"), "rating")


@dataclass(frozen=True)
class SideInfo:
    """
    Binary side vectors of users and items.

    Attributes:
    user_vectors -- the n_users x s_1 user side vectors
    item_vectors -- the n_items x s_2 item side vectors
    """

    user_vectors: sparse.csr_matrix
    item_vectors: sparse.csr_matrix

    def __post_init__(self) -> None:
        for name in ("user_vectors", "item_vectors"):
            matrix = sparse.csr_matrix(getattr(self, name), dtype=float)
            if matrix.nnz and not np.all(matrix.data == 1.0):
                raise ContractViolationError(f"{name} must be binary")
            object.__setattr__(self, name, matrix)

    def user_index_set(self, i: int) -> np.ndarray:
        """
        Return I_i, the positions of the non-zero side features of user i.
        """
        return self.user_vectors.getrow(i).indices

    def item_index_set(self, j: int) -> np.ndarray:
        """
        Return J_j, the positions of the non-zero side features of item j.
        """
        return self.item_vectors.getrow(j).indices
