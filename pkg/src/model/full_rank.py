"""
The full-rank model, where the weight tensor is learned whole on the Kronecker product of the
feature maps, and its closed-form Bayesian linear regression posterior used as an oracle.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from math import prod

import numpy as np
from scipy import linalg, sparse

from src.constants import DEFAULT_PRIOR_W_VAR, FULL_RANK_ORACLE_LIMIT
from src.datasets import RegressionDataset
from src.errors import SizeLimitError
from src.features.feature_map import FeatureMap, as_inputs
from src.model.tgp_model import TgpModel, sample_prior
from src.tensors.contractions import kron_rows
from src.tensors.tucker_weights import TuckerWeights


def full_rank_model(
    maps: Sequence[FeatureMap],
    noise_var: float,
    prior_w_var: float = DEFAULT_PRIOR_W_VAR,
    seed: int = 0,
) -> TgpModel:
    """
    Return a model whose factors are identities held fixed, so the core is the full
    weight tensor theta with its N(0, prior_w_var) prior.

    Keyword arguments:
    maps -- the feature maps
    noise_var -- the observation noise variance
    prior_w_var -- the prior variance of the weights
    seed -- the seed of the initial weight draw
    """
    dims = [feature_map.output_len for feature_map in maps]
    drawn = sample_prior(dims, dims, len(dims), 1.0, prior_w_var, seed)
    weights = TuckerWeights(drawn.core, [np.eye(n) for n in dims])
    return TgpModel(maps, weights, noise_var, 1.0, prior_w_var, learn_u=False, learn_w=True)


def kron_features(maps: Sequence[FeatureMap], inputs) -> np.ndarray:
    """
    Return the N x prod(n_d) matrix of Kronecker features phi(x) = phi_1(x) kron ... kron phi_D(x).
    """
    inputs = as_inputs(inputs)
    blocks = []
    for feature_map in maps:
        matrix = feature_map.feature_matrix(inputs)
        blocks.append(matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix))
    return kron_rows(blocks)


@dataclass
class FullRankPosterior:
    """
    The Gaussian posterior of the full weight vector.

    Attributes:
    maps -- the feature maps
    mean -- the posterior mean of vec(theta)
    precision_factor -- the Cholesky factorisation of the posterior precision
    """

    maps: list[FeatureMap]
    mean: np.ndarray
    precision_factor: tuple[np.ndarray, bool]

    def predict(self, inputs) -> tuple[np.ndarray, np.ndarray]:
        """
        Return the posterior mean and variance of f at every input row.
        """
        phi = kron_features(self.maps, inputs)
        covariance_rows = linalg.cho_solve(self.precision_factor, phi.T).T
        return phi @ self.mean, np.sum(phi * covariance_rows, axis=1)


def full_rank_posterior(
    maps: Sequence[FeatureMap],
    data: RegressionDataset,
    noise_var: float,
    prior_w_var: float = DEFAULT_PRIOR_W_VAR,
    limit: int = FULL_RANK_ORACLE_LIMIT,
) -> FullRankPosterior:
    """
    Return the closed-form posterior of Bayesian linear regression on Kronecker features,
    precision Phi^T Phi / sigma^2 + I / sigma_w^2 and mean precision^-1 Phi^T y / sigma^2.

    Keyword arguments:
    maps -- the feature maps
    data -- the observations
    noise_var -- the observation noise variance
    prior_w_var -- the prior variance of the weights
    limit -- the maximal number of weights
    """
    size = prod(feature_map.output_len for feature_map in maps)
    if size > limit:
        raise SizeLimitError(f"Full-rank posterior over {size} weights exceeds the limit of {limit}")
    phi = kron_features(maps, data.inputs)
    precision = phi.T @ phi / noise_var + np.eye(size) / prior_w_var
    factor = linalg.cho_factor(precision, lower=True)
    mean = linalg.cho_solve(factor, phi.T @ data.targets / noise_var)
    return FullRankPosterior(list(maps), mean, factor)
