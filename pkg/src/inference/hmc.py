"""
Full-batch Hamiltonian Monte Carlo over the learned blocks of a TgpModel.

Every iteration draws Gaussian momenta for the core and every learned factor, runs L leapfrog
steps (half momentum step, alternating full steps, half momentum step) with one step size per
block, and accepts the end point with probability min(1, exp(H_start - H_end)) where
H = -log_joint + sum |p|^2 / 2. Both momentum updates use the gradient of the whole log joint,
prior included, for the core and the factors alike.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat

import numpy as np

from src.constants import (
    DUAL_AVERAGING_GAMMA,
    DUAL_AVERAGING_KAPPA,
    DUAL_AVERAGING_T0,
    DUAL_AVERAGING_TARGET,
    NON_FINITE_ABORT_FRACTION,
    NON_FINITE_MIN_ITERATIONS,
)
from src.datasets import RegressionDataset
from src.errors import ContractViolationError, DivergenceError
from src.inference.chain_set import ChainSet
from src.inference.metric_trace import MetricTrace
from src.inference.sgd import regression_rmse
from src.model.tgp_model import TgpModel, grad_log_joint, log_joint, sample_prior
from src.tensors.dense_tensor import DenseTensor
from src.tensors.tucker_weights import TuckerWeights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HmcConfig:
    """
    Settings of an HMC run.

    Attributes:
    leapfrog_steps -- the number L of leapfrog steps per iteration
    step_w -- the leapfrog step size of the core
    step_u -- the step size of the factors, one for all or one per factor, step_w when None
    iterations -- the iterations of every chain, warmup included
    warmup -- the leading iterations whose draws are discarded
    chains -- the number of independent chains
    seed -- the seed every chain seed is spawned from
    adapt -- whether step sizes are tuned by dual averaging during warmup
    target_accept -- the acceptance rate targeted by the adaptation
    workers -- the number of processes running chains, 1 for a sequential run
    trace_every -- the metric trace records every trace_every iterations and the last one
    """

    leapfrog_steps: int = 10
    step_w: float = 1e-3
    step_u: float | tuple[float, ...] | None = None
    iterations: int = 600
    warmup: int = 300
    chains: int = 4
    seed: int = 0
    adapt: bool = False
    target_accept: float = DUAL_AVERAGING_TARGET
    workers: int = 1
    trace_every: int = 10

    def __post_init__(self) -> None:
        if self.leapfrog_steps < 1:
            raise ContractViolationError(f"At least one leapfrog step is needed, got {self.leapfrog_steps}")
        if not 0 <= self.warmup < self.iterations:
            raise ContractViolationError(
                f"Warmup {self.warmup} must be non-negative and below the {self.iterations} iterations"
            )
        if self.chains < 1 or self.workers < 1:
            raise ContractViolationError(f"Invalid chain count {self.chains} or worker count {self.workers}")
        if self.trace_every < 1:
            raise ContractViolationError(f"Trace period must be at least 1, got {self.trace_every}")
        steps = [self.step_w] + list(np.atleast_1d(self.step_u if self.step_u is not None else self.step_w))
        if any(step <= 0 for step in steps):
            raise ContractViolationError(f"Step sizes must be strictly positive, got {steps}")
        if not 0.0 < self.target_accept < 1.0:
            raise ContractViolationError(f"Target acceptance must lie in (0, 1), got {self.target_accept}")

    @property
    def retained(self) -> int:
        return self.iterations - self.warmup

    def block_steps(self, model: TgpModel) -> list[float]:
        """
        Return the step size of every learned block, the core first.
        """
        step_u = self.step_w if self.step_u is None else self.step_u
        factor_steps = list(np.broadcast_to(np.atleast_1d(step_u), (model.order,)))
        steps = [self.step_w] if model.learn_w else []
        if model.learn_u:
            steps.extend(float(step) for step in factor_steps)
        return steps


def positions(model: TgpModel) -> list[np.ndarray]:
    """
    Return the learned blocks of the model, the core first, then the factors.
    """
    blocks = [model.weights.core.array] if model.learn_w else []
    if model.learn_u:
        blocks.extend(model.weights.factors)
    return blocks


def with_positions(model: TgpModel, blocks: Sequence[np.ndarray]) -> TgpModel:
    """
    Return a copy of the model whose learned blocks hold the given values.
    """
    blocks = list(blocks)
    core = DenseTensor.from_array(blocks.pop(0).copy()) if model.learn_w else model.weights.core.copy()
    factors = [block.copy() for block in blocks] if model.learn_u else [factor.copy() for factor in model.weights.factors]
    return model.with_weights(TuckerWeights(core, factors))


def _block_gradient(model: TgpModel, data: RegressionDataset) -> list[np.ndarray]:
    grads = grad_log_joint(model, data, 1.0 if len(data) else 0.0)
    blocks = [grads.grad_w] if model.learn_w else []
    if model.learn_u:
        blocks.extend(grads.grad_u)
    return blocks


def hamiltonian(model: TgpModel, data: RegressionDataset, momenta: Sequence[np.ndarray]) -> float:
    """
    Return H = -log_joint + sum |p|^2 / 2. The log joint omits its normalising constants,
    which shifts H by a constant that cancels in acceptance ratios.
    """
    return -log_joint(model, data) + 0.5 * sum(float(np.sum(momentum**2)) for momentum in momenta)


def leapfrog(
    model: TgpModel,
    data: RegressionDataset,
    momenta: Sequence[np.ndarray],
    steps: Sequence[float],
    n_steps: int,
) -> tuple[TgpModel, list[np.ndarray]]:
    """
    Return the model and momenta at the end of n_steps leapfrog steps. Inputs are left untouched.

    Keyword arguments:
    model -- the starting point
    data -- the observations
    momenta -- the starting momentum of every learned block
    steps -- the step size of every learned block
    n_steps -- the number of leapfrog steps
    """
    blocks = [block.copy() for block in positions(model)]
    momenta = [momentum.copy() for momentum in momenta]
    current = model
    with np.errstate(over="ignore", invalid="ignore"):
        gradient = _block_gradient(current, data)
        for momentum, grad, step in zip(momenta, gradient, steps):
            momentum += 0.5 * step * grad
        for index in range(n_steps):
            for block, momentum, step in zip(blocks, momenta, steps):
                block += step * momentum
            current = with_positions(model, blocks)
            gradient = _block_gradient(current, data)
            weight = 1.0 if index < n_steps - 1 else 0.5
            for momentum, grad, step in zip(momenta, gradient, steps):
                momentum += weight * step * grad
    return current, momenta


class DualAveraging:
    """
    Dual-averaging adaptation of a step-size multiplier towards a target acceptance rate.

    Keyword arguments:
    target -- the targeted acceptance rate
    initial -- the initial multiplier
    """

    def __init__(self, target: float, initial: float = 1.0) -> None:
        self.target: float = target
        self.mu: float = math.log(10.0 * initial)
        self.count: int = 0
        self.error_average: float = 0.0
        self.log_multiplier: float = math.log(initial)
        self.log_multiplier_average: float = 0.0

    def update(self, accept_prob: float) -> float:
        """
        Return the multiplier to use next, given the acceptance probability just observed.
        """
        self.count += 1
        eta = 1.0 / (self.count + DUAL_AVERAGING_T0)
        self.error_average = (1.0 - eta) * self.error_average + eta * (self.target - accept_prob)
        self.log_multiplier = self.mu - math.sqrt(self.count) / DUAL_AVERAGING_GAMMA * self.error_average
        weight = self.count ** (-DUAL_AVERAGING_KAPPA)
        self.log_multiplier_average = weight * self.log_multiplier + (1.0 - weight) * self.log_multiplier_average
        return math.exp(self.log_multiplier)

    @property
    def final(self) -> float:
        return math.exp(self.log_multiplier_average)


@dataclass
class ChainRun:
    draws: list[TuckerWeights] = field(default_factory=list)
    accept_rate: float = 0.0
    non_finite: int = 0
    seed: int = 0
    trace: MetricTrace = field(default_factory=MetricTrace)


def initial_state(model: TgpModel, seed: int) -> TgpModel:
    """
    Return the model with its learned blocks drawn from the prior.
    """
    drawn = sample_prior(
        model.weights.dims, model.ranks, model.order, model.prior_u_var, model.prior_w_var, seed
    )
    core = drawn.core if model.learn_w else model.weights.core.copy()
    factors = drawn.factors if model.learn_u else [factor.copy() for factor in model.weights.factors]
    return model.with_weights(TuckerWeights(core, factors))


def run_chain(
    model: TgpModel, data: RegressionDataset, cfg: HmcConfig, seed_sequence: np.random.SeedSequence
) -> ChainRun:
    """
    Return the retained draws and statistics of one chain.

    Keyword arguments:
    model -- the template fixing feature maps, variances and the blocks held fixed
    data -- the observations
    cfg -- the run settings
    seed_sequence -- the seed of the chain
    """
    rng = np.random.default_rng(seed_sequence)
    chain_seed = int(seed_sequence.generate_state(1)[0])
    run = ChainRun(seed=chain_seed)
    current = initial_state(model, chain_seed)
    base_steps = cfg.block_steps(model)
    multiplier = 1.0
    adaptation = DualAveraging(cfg.target_accept) if cfg.adapt else None
    accepted_after_warmup = 0

    for iteration in range(cfg.iterations):
        steps = [multiplier * step for step in base_steps]
        momenta = [rng.standard_normal(block.shape) for block in positions(current)]
        start_energy = hamiltonian(current, data, momenta)
        proposal, end_momenta = leapfrog(current, data, momenta, steps, cfg.leapfrog_steps)
        with np.errstate(over="ignore", invalid="ignore"):
            end_energy = hamiltonian(proposal, data, end_momenta)
        if not np.isfinite(end_energy):
            run.non_finite += 1
            accept_prob = 0.0
            logger.warning("Chain %d iteration %d: non-finite Hamiltonian, proposal rejected", chain_seed, iteration)
        else:
            accept_prob = math.exp(min(0.0, start_energy - end_energy))
        accepted = rng.uniform() <= accept_prob
        if accepted:
            current = proposal

        done = iteration + 1
        if done >= NON_FINITE_MIN_ITERATIONS and run.non_finite > NON_FINITE_ABORT_FRACTION * done:
            raise DivergenceError(
                f"{run.non_finite} of {done} proposals had a non-finite Hamiltonian, "
                f"reduce the step sizes (currently {steps})"
            )
        if adaptation is not None and iteration < cfg.warmup:
            multiplier = adaptation.update(accept_prob)
            if iteration == cfg.warmup - 1:
                multiplier = adaptation.final
                logger.info("Chain %d: adapted step multiplier %.4g", chain_seed, multiplier)
        if iteration >= cfg.warmup:
            accepted_after_warmup += int(accepted)
            run.draws.append(current.weights.copy())
        if done % cfg.trace_every and done != cfg.iterations:
            continue
        run.trace.record(
            done,
            regression_rmse(current, data),
            math.nan,
            log_joint(current, data),
            accepted_after_warmup / (iteration - cfg.warmup + 1) if iteration >= cfg.warmup else math.nan,
        )
    run.accept_rate = accepted_after_warmup / cfg.retained
    logger.info("Chain %d: acceptance rate %.3f", chain_seed, run.accept_rate)
    return run


def hmc(model: TgpModel, data: RegressionDataset, cfg: HmcConfig) -> ChainSet:
    """
    Return the post-warmup draws of independent HMC chains, each started from a prior draw.
    Chains get seeds spawned from cfg.seed, so the result does not depend on cfg.workers.

    Keyword arguments:
    model -- the template fixing feature maps, variances and the blocks held fixed
    data -- the observations, used in full at every gradient
    cfg -- the run settings
    """
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.chains)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            runs = list(pool.map(run_chain, repeat(model), repeat(data), repeat(cfg), children))
    else:
        runs = [run_chain(model, data, cfg, child) for child in children]
    return ChainSet(
        [run.draws for run in runs],
        [run.accept_rate for run in runs],
        [run.seed for run in runs],
        learn_u=model.learn_u,
        learn_w=model.learn_w,
        non_finite=[run.non_finite for run in runs],
        traces=[run.trace for run in runs],
    )
