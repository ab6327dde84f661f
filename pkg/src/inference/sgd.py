"""
MAP training by minibatch stochastic gradient ascent on the log joint:
param <- param + eps/2 (prior gradient + N/m sum of minibatch likelihood gradients).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.constants import DIVERGENCE_FACTOR
from src.datasets import RegressionDataset
from src.errors import ContractViolationError, DivergenceError
from src.inference.metric_trace import MetricTrace
from src.model.tgp_model import GradientBundle, TgpModel, grad_log_joint, log_joint, predict_batch
from src.tensors.contractions import superdiagonal

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SgdConfig:
    """
    Settings of a stochastic gradient run.

    Attributes:
    step_u -- the step size eps_u of the factors
    step_w -- the step size eps_w of the core
    minibatch -- the minibatch size m
    epochs -- the number of passes over the training data
    seed -- the seed of the minibatch shuffles
    learn_w -- whether the core is learned, otherwise it is held at the superdiagonal identity
    eval_every -- the number of epochs between two metric records
    decay -- the step-size decay, steps are eps / (1 + decay * epoch), constant when 0
    """

    step_u: float = 1e-6
    step_w: float = 1e-6
    minibatch: int = 100
    epochs: int = 10
    seed: int = 0
    learn_w: bool = True
    eval_every: int = 1
    decay: float = 0.0

    def __post_init__(self) -> None:
        if self.step_u < 0 or self.step_w < 0:
            raise ContractViolationError(f"Step sizes must be non-negative, got {self.step_u}, {self.step_w}")
        if self.minibatch < 1 or self.epochs < 0 or self.eval_every < 1 or self.decay < 0:
            raise ContractViolationError(
                f"Invalid minibatch {self.minibatch}, epochs {self.epochs}, "
                f"eval_every {self.eval_every} or decay {self.decay}"
            )

    def steps_at(self, epoch: int) -> tuple[float, float]:
        """
        Return the step sizes (eps_u, eps_w) used during the given 0-based epoch.
        """
        factor = 1.0 / (1.0 + self.decay * epoch)
        return self.step_u * factor, self.step_w * factor


def regression_rmse(model: TgpModel, data: RegressionDataset) -> float:
    if len(data) == 0:
        return math.nan
    residuals = data.targets - predict_batch(model, data.inputs)
    return float(np.sqrt(np.mean(residuals**2)))


def ascend(model: TgpModel, grads: GradientBundle, step_u: float, step_w: float) -> None:
    """
    Apply one ascent step in place to the learned blocks of the model.
    """
    if model.learn_w:
        model.weights.core.data += 0.5 * step_w * grads.grad_w.ravel()
    if model.learn_u:
        for factor, grad in zip(model.weights.factors, grads.grad_u):
            factor += 0.5 * step_u * grad


def hold_core_at_identity(model: TgpModel) -> None:
    ranks = model.ranks
    if len(set(ranks)) != 1:
        raise ContractViolationError(f"A fixed identity core needs equal ranks, got {ranks}")
    model.weights.core = superdiagonal(ranks[0], len(ranks))
    model.learn_w = False


def sgd_map(
    model: TgpModel,
    train: RegressionDataset,
    valid: RegressionDataset | None,
    cfg: SgdConfig,
) -> tuple[TgpModel, MetricTrace]:
    """
    Return the model fitted by minibatch stochastic gradient ascent and its metric trace.
    Every epoch is one pass over a seeded permutation of the training rows, cut into
    consecutive minibatches whose rows keep their dataset order.

    Keyword arguments:
    model -- the initial model, left untouched
    train -- the training data
    valid -- the validation data, if any
    cfg -- the run settings
    """
    n_train = len(train)
    if cfg.minibatch > n_train:
        raise ContractViolationError(f"Minibatch of {cfg.minibatch} for {n_train} training rows")
    model = model.copy()
    if not cfg.learn_w:
        hold_core_at_identity(model)

    rng = np.random.default_rng(cfg.seed)
    trace = MetricTrace()
    initial_rmse = regression_rmse(model, train)
    trace.record(0, initial_rmse, regression_rmse(model, valid) if valid is not None else math.nan, log_joint(model, train))
    logger.info("epoch 0: train RMSE %.6f", initial_rmse)

    for epoch in range(1, cfg.epochs + 1):
        step_u, step_w = cfg.steps_at(epoch - 1)
        order = rng.permutation(n_train)
        for start in range(0, n_train, cfg.minibatch):
            rows = np.sort(order[start : start + cfg.minibatch])
            grads = grad_log_joint(model, train.subset(rows), n_train / rows.size)
            ascend(model, grads, step_u, step_w)

        if epoch % cfg.eval_every and epoch != cfg.epochs:
            continue
        train_rmse = regression_rmse(model, train)
        valid_rmse = regression_rmse(model, valid) if valid is not None else math.nan
        trace.record(epoch, train_rmse, valid_rmse, log_joint(model, train))
        logger.info("epoch %d: train RMSE %.6f, valid RMSE %.6f", epoch, train_rmse, valid_rmse)
        if not np.isfinite(train_rmse) or (initial_rmse > 0 and train_rmse > DIVERGENCE_FACTOR * initial_rmse):
            raise DivergenceError(
                f"Training diverged at epoch {epoch}: train RMSE {train_rmse:.6g} "
                f"against {initial_rmse:.6g} initially, reduce the step sizes"
            )
    return model, trace
