"""
Defines TgpModel class, the Tucker Gaussian process regression model
f(x) = W x_d (U^(d)^T phi_d(x)), with its priors, log joint, analytic gradients
and additive-component decomposition.
"""

from __future__ import annotations

import functools
from collections.abc import Sequence
from dataclasses import dataclass
from math import prod

import numpy as np
from lxml import etree

from src.constants import ADDITIVE_COMPONENT_LIMIT, DEFAULT_NOISE_VAR, DEFAULT_PRIOR_W_VAR
from src.datasets import RegressionDataset
from src.errors import ContractViolationError, SizeLimitError
from src.features.feature_map import FeatureMap, as_inputs
from src.services.xml_encoding import format_float
from src.tensors.contractions import batch_contract, full_contract, outer_weights
from src.tensors.dense_tensor import DenseTensor
from src.tensors.tucker_weights import TuckerWeights


def default_prior_u_var(ranks: Sequence[int]) -> float:
    """
    Return 1/r, generalised to unequal ranks by the geometric mean of the ranks,
    which keeps the prior variance of every reconstructed entry at prior_w_var.
    """
    return float(prod(ranks) ** (-1.0 / len(ranks)))


class TgpModel:
    """
    A TgpModel holds one feature map per input dimension, the Tucker parameters and
    the noise and prior variances.

    Keyword arguments:
    maps -- the D feature maps
    weights -- the Tucker parameters, factor d having maps[d].output_len rows
    noise_var -- the observation noise variance sigma^2
    prior_u_var -- the prior variance of factor entries, 1/r by default
    prior_w_var -- the prior variance of core entries
    learn_u -- whether inference updates the factors
    learn_w -- whether inference updates the core

    Attributes:
    maps -- the feature maps
    weights -- the Tucker parameters
    noise_var -- the noise variance
    prior_u_var -- the prior variance of factor entries
    prior_w_var -- the prior variance of core entries
    learn_u -- whether the factors are learned
    learn_w -- whether the core is learned
    """

    def __init__(
        self,
        maps: Sequence[FeatureMap],
        weights: TuckerWeights,
        noise_var: float = DEFAULT_NOISE_VAR,
        prior_u_var: float | None = None,
        prior_w_var: float = DEFAULT_PRIOR_W_VAR,
        learn_u: bool = True,
        learn_w: bool = True,
    ) -> None:
        if len(maps) != weights.order:
            raise ContractViolationError(f"{len(maps)} feature maps for a {weights.order}-way core")
        for mode, (feature_map, rows) in enumerate(zip(maps, weights.dims)):
            if feature_map.output_len != rows:
                raise ContractViolationError(
                    f"Feature map {mode} has length {feature_map.output_len} "
                    f"but factor {mode} has {rows} rows"
                )
        prior_u_var = default_prior_u_var(weights.ranks) if prior_u_var is None else prior_u_var
        for name, value in (
            ("noise_var", noise_var),
            ("prior_u_var", prior_u_var),
            ("prior_w_var", prior_w_var),
        ):
            if not np.isfinite(value) or value <= 0:
                raise ContractViolationError(f"{name} must be strictly positive, got {value}")
        self.maps: list[FeatureMap] = list(maps)
        self.weights: TuckerWeights = weights
        self.noise_var: float = float(noise_var)
        self.prior_u_var: float = float(prior_u_var)
        self.prior_w_var: float = float(prior_w_var)
        self.learn_u: bool = learn_u
        self.learn_w: bool = learn_w

    @property
    def order(self) -> int:
        return self.weights.order

    @property
    def ranks(self) -> tuple[int, ...]:
        return self.weights.ranks

    def with_weights(self, weights: TuckerWeights) -> TgpModel:
        """
        Return a model sharing the feature maps and settings of this one with other parameters.
        """
        return TgpModel(
            self.maps,
            weights,
            self.noise_var,
            self.prior_u_var,
            self.prior_w_var,
            self.learn_u,
            self.learn_w,
        )

    def copy(self) -> TgpModel:
        return self.with_weights(self.weights.copy())

    def save(self, tree_name: str = "model") -> etree.Element:
        """
        Save the model in XML format, feature map state included.

        Return the result of this generation.

        Keyword arguments:
        tree_name -- the name that should be given to the root element of the generated XML.
        """
        tree = etree.Element(tree_name)
        tree.set("noise_var", format_float(self.noise_var))
        tree.set("prior_u_var", format_float(self.prior_u_var))
        tree.set("prior_w_var", format_float(self.prior_w_var))
        tree.set("learn_u", str(self.learn_u).lower())
        tree.set("learn_w", str(self.learn_w).lower())
        maps = etree.SubElement(tree, "feature_maps")
        for feature_map in self.maps:
            maps.append(feature_map.save("feature_map"))
        tree.append(self.weights.save("weights"))
        return tree


@dataclass
class GradientBundle:
    """
    The gradient of the log joint with respect to the core and to every factor.
    """

    grad_w: np.ndarray
    grad_u: list[np.ndarray]

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.grad_w.ravel()] + [grad.ravel() for grad in self.grad_u])


def psi_matrices(model: TgpModel, inputs) -> list[np.ndarray]:
    """
    Return, for every mode d, the N x r_d matrix whose row i is psi_d(x_i) = U^(d)^T phi_d(x_i).
    """
    inputs = as_inputs(inputs)
    return [
        feature_map.project(inputs, factor)
        for feature_map, factor in zip(model.maps, model.weights.factors)
    ]


def predict(model: TgpModel, x) -> float:
    """
    Return f(x) for a single input.

    Keyword arguments:
    model -- the model to evaluate
    x -- the covariates of the input
    """
    psis = [psi[0] for psi in psi_matrices(model, as_inputs(x)[:1])]
    return full_contract(model.weights.core, psis)


def predict_batch(model: TgpModel, inputs) -> np.ndarray:
    """
    Return f(x_i) for every row of the inputs.
    """
    return batch_contract(model.weights.core.array, psi_matrices(model, inputs))


def log_joint(model: TgpModel, data: RegressionDataset) -> float:
    """
    Return the log joint density of targets and parameters without its Gaussian
    normalising constants:
    -sum (y - f)^2 / 2 sigma^2 - sum_k tr(U_k^T U_k) / 2 sigma_u^2 - w^T w / 2 sigma_w^2.

    Keyword arguments:
    model -- the model holding the parameters
    data -- the observations
    """
    weights = model.weights
    value = -0.5 / model.prior_w_var * float(weights.core.data @ weights.core.data)
    value -= 0.5 / model.prior_u_var * sum(float(np.sum(factor**2)) for factor in weights.factors)
    if len(data):
        residuals = data.targets - predict_batch(model, data.inputs)
        value -= 0.5 / model.noise_var * float(residuals @ residuals)
    return value


def grad_log_joint(model: TgpModel, batch: RegressionDataset, scale: float = 1.0) -> GradientBundle:
    """
    Return the prior gradient plus scale times the summed likelihood gradient over the batch.

    Keyword arguments:
    model -- the model holding the parameters
    batch -- the observations of the batch
    scale -- N/m for a minibatch of m out of N observations, 1 for the full batch
    """
    core = model.weights.core.array
    factors = model.weights.factors
    grad_w = -core / model.prior_w_var
    grad_u = [-factor / model.prior_u_var for factor in factors]
    if len(batch) == 0:
        if scale != 0:
            raise ContractViolationError("Likelihood gradient of an empty batch")
        return GradientBundle(grad_w, grad_u)

    psis = psi_matrices(model, batch.inputs)
    residuals = batch.targets - batch_contract(core, psis)
    weighted = residuals * (scale / model.noise_var)
    grad_w = grad_w + outer_weights([weighted[:, np.newaxis] * psis[0]] + psis[1:])
    for mode, feature_map in enumerate(model.maps):
        coefficients = batch_contract(core, psis, skip=mode) * weighted[:, np.newaxis]
        grad_u[mode] = grad_u[mode] + feature_map.backproject(batch.inputs, coefficients)
    return GradientBundle(grad_w, grad_u)


def additive_components(model: TgpModel, x, limit: int = ADDITIVE_COMPONENT_LIMIT) -> DenseTensor:
    """
    Return the r_1 x ... x r_D tensor of summands W_{i_1..i_D} prod_d psi_d(x)_{i_d},
    whose entries add up to f(x).

    Keyword arguments:
    model -- the model to decompose
    x -- the covariates of the input
    limit -- the maximal number of components
    """
    return DenseTensor.from_array(additive_components_batch(model, as_inputs(x)[:1], limit)[0])


def additive_components_batch(model: TgpModel, inputs, limit: int = ADDITIVE_COMPONENT_LIMIT) -> np.ndarray:
    """
    Return the N x r_1 x ... x r_D array of additive components of every input row.
    """
    if prod(model.ranks) > limit:
        raise SizeLimitError(f"{prod(model.ranks)} additive components exceed the limit of {limit}")
    psis = psi_matrices(model, inputs)
    outer = functools.reduce(
        lambda left, right: np.einsum("z...,zb->z...b", left, right), psis[1:], psis[0]
    )
    return model.weights.core.array[np.newaxis] * outer


def sample_prior(
    dims: Sequence[int],
    r: int | Sequence[int],
    D: int,
    prior_u_var: float | None = None,
    prior_w_var: float = DEFAULT_PRIOR_W_VAR,
    seed: int = 0,
) -> TuckerWeights:
    """
    Return Tucker parameters drawn from the prior: core entries iid N(0, prior_w_var) and
    factor entries iid N(0, prior_u_var). Each block draws from its own child of the seed,
    so extending a factor with extra rows leaves the shared rows unchanged.

    Keyword arguments:
    dims -- the row count n_d of every factor
    r -- the rank, one for all modes or one per mode
    D -- the number of modes
    prior_u_var -- the prior variance of factor entries, 1/r by default
    prior_w_var -- the prior variance of core entries, 0 giving a zero core
    seed -- the seed of the draw
    """
    ranks = (int(r),) * D if np.isscalar(r) else tuple(int(rank) for rank in r)
    if len(dims) != D or len(ranks) != D:
        raise ContractViolationError(f"Expected {D} dims and ranks, got {len(dims)} and {len(ranks)}")
    if any(n < 1 for n in dims) or any(rank < 1 for rank in ranks):
        raise ContractViolationError(f"Dims {tuple(dims)} and ranks {ranks} must be positive")
    prior_u_var = default_prior_u_var(ranks) if prior_u_var is None else prior_u_var
    if prior_u_var < 0 or prior_w_var < 0:
        raise ContractViolationError("Prior variances must be non-negative")
    streams = [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(D + 1)]
    core = streams[0].normal(0.0, np.sqrt(prior_w_var), size=ranks)
    factors = [
        stream.normal(0.0, np.sqrt(prior_u_var), size=(n, rank))
        for stream, n, rank in zip(streams[1:], dims, ranks)
    ]
    return TuckerWeights(DenseTensor.from_array(core), factors)
