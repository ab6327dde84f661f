"""
Contraction primitives on dense tensors: the full contraction against one vector per mode,
the contraction against all but one mode, the Kronecker product of vectors
and the reconstruction of a full tensor from its Tucker parameters.

Every function is pure. Layouts are last-index-fastest throughout,
so that flatten(core) and kron(vectors) line up entry by entry.
"""

from __future__ import annotations

import functools
import string
from collections.abc import Sequence
from math import prod

import numpy as np
import tensorly as tl

from src.constants import RECONSTRUCT_ENTRY_LIMIT
from src.errors import ContractViolationError, SizeLimitError
from src.tensors.dense_tensor import DenseTensor

_MODE_LETTERS = string.ascii_lowercase.replace("z", "")


def _check_vectors(core: DenseTensor, vectors: Sequence[np.ndarray], skip: int | None = None) -> list[np.ndarray]:
    if len(vectors) != core.order:
        raise ContractViolationError(
            f"Expected {core.order} vectors, got {len(vectors)}"
        )
    checked = []
    for mode, (extent, vector) in enumerate(zip(core.dims, vectors)):
        if mode == skip:
            checked.append(None)
            continue
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (extent,):
            raise ContractViolationError(
                f"Vector {mode} has shape {vector.shape}, expected ({extent},)"
            )
        checked.append(vector)
    return checked


def full_contract(core: DenseTensor, vectors: Sequence[np.ndarray]) -> float:
    """
    Return the sum over all multi-indices of the core entry times the product of the
    matching vector entries, i.e. vec(core)^T (vectors[0] kron ... kron vectors[D-1]).

    Keyword arguments:
    core -- the tensor to contract
    vectors -- one vector per mode, vector d of length dims[d]
    """
    checked = _check_vectors(core, vectors)
    result = core.array
    for vector in reversed(checked):
        result = result @ vector
    return float(result)


def contract_all_but_one(core: DenseTensor, vectors: Sequence[np.ndarray], k: int) -> np.ndarray:
    """
    Return the vector of length dims[k] whose component l is the full contraction
    with vectors[k] replaced by the unit vector e_l.

    Keyword arguments:
    core -- the tensor to contract
    vectors -- one vector per mode, entry k is ignored
    k -- the mode left open
    """
    if not 0 <= k < core.order:
        raise ContractViolationError(f"Mode {k} out of range for a {core.order}-way tensor")
    checked = _check_vectors(core, vectors, skip=k)
    result = np.moveaxis(core.array, k, 0)
    for vector in reversed([vector for mode, vector in enumerate(checked) if mode != k]):
        result = result @ vector
    return np.asarray(result, dtype=float)


def kron(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """
    Return the Kronecker product of the vectors, last index varying fastest.
    """
    if len(vectors) == 0:
        raise ContractViolationError("Kronecker product of an empty list")
    if any(np.asarray(vector).size == 0 for vector in vectors):
        raise ContractViolationError("Kronecker product of an empty vector")
    return functools.reduce(np.kron, [np.asarray(vector, dtype=float).ravel() for vector in vectors])


def kron_rows(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """
    Return the row-wise Kronecker product of N x n_d matrices, an N x prod(n_d) matrix.
    """
    result = np.asarray(matrices[0], dtype=float)
    for matrix in matrices[1:]:
        result = np.einsum("za,zb->zab", result, np.asarray(matrix, dtype=float)).reshape(result.shape[0], -1)
    return result


def batch_contract(core: np.ndarray, psis: Sequence[np.ndarray], skip: int | None = None) -> np.ndarray:
    """
    Return full_contract (or contract_all_but_one when skip is given) for a batch of
    m examples at once.

    Keyword arguments:
    core -- the core as an r_1 x ... x r_D array
    psis -- one m x r_d matrix per mode, row i holding the vector of example i
    skip -- the mode left open, if any

    Returns:
    a vector of length m, or an m x r_skip matrix when skip is given
    """
    order = core.ndim
    if order == 1 and skip == 0:
        return np.tile(core, (psis[0].shape[0], 1))
    letters = _MODE_LETTERS[:order]
    operands = [core]
    subscripts = [letters]
    for mode, psi in enumerate(psis):
        if mode == skip:
            continue
        operands.append(psi)
        subscripts.append("z" + letters[mode])
    output = "z" + (letters[skip] if skip is not None else "")
    return np.einsum(",".join(subscripts) + "->" + output, *operands, optimize=True)


def outer_weights(psis: Sequence[np.ndarray]) -> np.ndarray:
    """
    Return sum_i psi_1[i] o ... o psi_D[i], an r_1 x ... x r_D array.
    """
    letters = _MODE_LETTERS[: len(psis)]
    subscripts = ",".join("z" + letter for letter in letters)
    return np.einsum(subscripts + "->" + letters, *psis, optimize=True)


def superdiagonal(r: int, order: int) -> DenseTensor:
    """
    Return the r x ... x r tensor holding ones where all indices agree, the identity for order 2.
    """
    array = np.zeros((r,) * order)
    array[tuple(np.arange(r) for _ in range(order))] = 1.0
    return DenseTensor.from_array(array)


def reconstruct(weights, limit: int = RECONSTRUCT_ENTRY_LIMIT) -> DenseTensor:
    """
    Return the full tensor core x_d U^(d)^T, entry (i_1..i_D) being the full contraction
    of the core with rows i_1 .. i_D of the factors.

    Keyword arguments:
    weights -- the TuckerWeights to expand
    limit -- the maximal number of entries allowed in the result
    """
    size = prod(factor.shape[0] for factor in weights.factors)
    if size > limit:
        raise SizeLimitError(f"Reconstruction of {size} entries exceeds the limit of {limit}")
    full = tl.tucker_to_tensor((tl.tensor(weights.core.array), [tl.tensor(factor) for factor in weights.factors]))
    return DenseTensor.from_array(tl.to_numpy(full))
