"""
Defines ChainSet class, the retained HMC draws of every chain,
and the posterior-predictive summary computed from them.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence

import numpy as np
from lxml import etree

from src.constants import LOWER_PERCENTILE, UPPER_PERCENTILE
from src.errors import ContractViolationError
from src.features.feature_map import FeatureMap, as_inputs
from src.inference.metric_trace import MetricTrace
from src.services.xml_encoding import format_float
from src.tensors.contractions import batch_contract
from src.tensors.tucker_weights import TuckerWeights


class ChainSet:
    """
    The post-warmup parameter draws of several HMC chains.

    Keyword arguments:
    chains -- the draws of every chain, in iteration order
    accept_rates -- the post-warmup acceptance rate of every chain
    seeds -- the seed every chain was started from
    learn_u -- whether the factors were sampled
    learn_w -- whether the core was sampled
    non_finite -- the number of rejected non-finite proposals of every chain
    traces -- the metric trace of every chain

    Attributes:
    chains -- the draws of every chain
    accept_rates -- the acceptance rates
    seeds -- the chain seeds
    learn_u -- whether the factors were sampled
    learn_w -- whether the core was sampled
    non_finite -- the non-finite proposal counts
    traces -- the metric traces
    """

    def __init__(
        self,
        chains: Sequence[Sequence[TuckerWeights]],
        accept_rates: Sequence[float],
        seeds: Sequence[int],
        learn_u: bool = True,
        learn_w: bool = True,
        non_finite: Sequence[int] | None = None,
        traces: Sequence[MetricTrace] | None = None,
    ) -> None:
        if len(accept_rates) != len(chains) or len(seeds) != len(chains):
            raise ContractViolationError("One acceptance rate and one seed are needed per chain")
        if any(not 0.0 <= rate <= 1.0 for rate in accept_rates):
            raise ContractViolationError(f"Acceptance rates must lie in [0, 1], got {list(accept_rates)}")
        shapes = {
            (draw.core.dims, tuple(factor.shape for factor in draw.factors))
            for chain in chains
            for draw in chain
        }
        if len(shapes) > 1:
            raise ContractViolationError("Chain draws have incompatible shapes")
        self.chains: list[list[TuckerWeights]] = [list(chain) for chain in chains]
        self.accept_rates: list[float] = [float(rate) for rate in accept_rates]
        self.seeds: list[int] = [int(seed) for seed in seeds]
        self.learn_u: bool = learn_u
        self.learn_w: bool = learn_w
        self.non_finite: list[int] = list(non_finite) if non_finite is not None else [0] * len(self.chains)
        self.traces: list[MetricTrace] = list(traces) if traces is not None else []

    @property
    def num_chains(self) -> int:
        return len(self.chains)

    @property
    def num_draws(self) -> int:
        return sum(len(chain) for chain in self.chains)

    def samples(self) -> Iterator[TuckerWeights]:
        for chain in self.chains:
            yield from chain

    def last(self) -> TuckerWeights:
        """
        Return the last draw of the last chain.
        """
        if self.num_draws == 0:
            raise ContractViolationError("The chain set holds no draws")
        return next(chain[-1] for chain in reversed(self.chains) if chain)

    def draws(self) -> np.ndarray:
        """
        Return the chains x draws x parameters array of the sampled parameters.
        """
        lengths = {len(chain) for chain in self.chains}
        if len(lengths) != 1:
            raise ContractViolationError(f"Chains have different lengths: {sorted(lengths)}")
        return np.array(
            [
                [draw.flatten(self.learn_w, self.learn_u) for draw in chain]
                for chain in self.chains
            ]
        )

    def parameter_names(self) -> list[str]:
        return self.last().parameter_names(self.learn_w, self.learn_u)

    def save(self, tree_name: str = "chains") -> etree.Element:
        """
        Save the chains in XML format.

        Return the result of this generation.

        Keyword arguments:
        tree_name -- the name that should be given to the root element of the generated XML.
        """
        tree = etree.Element(tree_name)
        tree.set("learn_u", str(self.learn_u).lower())
        tree.set("learn_w", str(self.learn_w).lower())
        for chain, rate, seed, non_finite in zip(self.chains, self.accept_rates, self.seeds, self.non_finite):
            chain_element = etree.SubElement(tree, "chain")
            chain_element.set("accept_rate", format_float(rate))
            chain_element.set("seed", str(seed))
            chain_element.set("non_finite", str(non_finite))
            for draw in chain:
                chain_element.append(draw.save("draw"))
        return tree


def _predict_draw(draw: TuckerWeights, maps: Sequence[FeatureMap], inputs: np.ndarray) -> np.ndarray:
    psis = [feature_map.project(inputs, factor) for feature_map, factor in zip(maps, draw.factors)]
    return batch_contract(draw.core.array, psis)


def sample_predictions(chains: ChainSet, maps: Sequence[FeatureMap], inputs) -> np.ndarray:
    """
    Return the chains x draws x N array of f(x_i) under every retained draw.
    Chains must hold the same number of draws.
    """
    inputs = as_inputs(inputs)
    return np.array([[_predict_draw(draw, maps, inputs) for draw in chain] for chain in chains.chains])


def posterior_predict(chains: ChainSet, maps: Sequence[FeatureMap], x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Return the posterior-predictive mean and the 2.5th and 97.5th percentiles of f at every input row.

    Keyword arguments:
    chains -- the retained draws
    maps -- the feature maps of the model
    x -- the N x P inputs
    """
    if chains.num_draws == 0:
        raise ContractViolationError("Posterior prediction from empty chains")
    inputs = as_inputs(x)
    predictions = np.array([_predict_draw(draw, maps, inputs) for draw in chains.samples()])
    lower, upper = np.percentile(predictions, [LOWER_PERCENTILE, UPPER_PERCENTILE], axis=0)
    return predictions.mean(axis=0), lower, upper
