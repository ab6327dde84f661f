"""
The collaborative-filtering specialisation of the TGP model:
f(u_i, v_j) = U_i^T W V_j, with W = I giving probabilistic matrix factorisation, and its
side-information variant
f(u_i, v_j) = a (U_i + b sum_{k in I_i} U_{n1+k})^T W (V_j + c sum_{k in J_j} V_{n2+k}).
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, replace

import numpy as np

from src.cf.ratings import RatingsData, SideInfo
from src.constants import CF_DEFAULT_RANK, DEFAULT_NOISE_VAR, DEFAULT_PRIOR_W_VAR, RATING_MAX, RATING_MIN
from src.errors import ContractViolationError
from src.features.feature_map import FeatureMap
from src.features.identity import IdentityFeatures
from src.features.side_augmented import SideAugmentedFeatures
from src.inference.metric_trace import MetricTrace
from src.inference.sgd import SgdConfig, hold_core_at_identity, sgd_map
from src.model.tgp_model import TgpModel, predict_batch, sample_prior

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CfConfig:
    """
    Settings of a collaborative-filtering model.

    Attributes:
    rank -- the rank r of both factors
    learn_w -- whether the core is learned, otherwise it is the identity
    use_side -- whether side information augments the identity features
    a -- the overall scale of side-information predictions
    b -- the weight of user side features
    c -- the weight of item side features
    noise_var -- the observation noise variance
    prior_u_var -- the prior variance of factor entries, 1/r when None
    prior_w_var -- the prior variance of core entries
    """

    rank: int = CF_DEFAULT_RANK
    learn_w: bool = False
    use_side: bool = False
    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    noise_var: float = DEFAULT_NOISE_VAR
    prior_u_var: float | None = None
    prior_w_var: float = DEFAULT_PRIOR_W_VAR

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ContractViolationError(f"Rank must be at least 1, got {self.rank}")
        if min(self.a, self.b, self.c) < 0:
            raise ContractViolationError(f"Side weights must be non-negative, got {self.a}, {self.b}, {self.c}")


def build_feature_maps(ratings: RatingsData, side: SideInfo | None, cfg: CfConfig) -> list[FeatureMap]:
    """
    Return the user and item feature maps. The single scale a of side-information predictions
    is split evenly, so the two-weight features are [sqrt(a) e_i, b sqrt(a) omega] for users
    and [sqrt(a) e_j, c sqrt(a) omega] for items.
    """
    if not cfg.use_side:
        return [IdentityFeatures(ratings.n_users, 0), IdentityFeatures(ratings.n_items, 1)]
    if side is None:
        raise ContractViolationError("Side information is enabled but no side vectors were given")
    if side.user_vectors.shape[0] != ratings.n_users or side.item_vectors.shape[0] != ratings.n_items:
        raise ContractViolationError(
            f"Side vectors for {side.user_vectors.shape[0]} users and {side.item_vectors.shape[0]} items, "
            f"ratings have {ratings.n_users} and {ratings.n_items}"
        )
    root = float(np.sqrt(cfg.a))
    return [
        SideAugmentedFeatures(side.user_vectors, root, cfg.b * root, 0),
        SideAugmentedFeatures(side.item_vectors, root, cfg.c * root, 1),
    ]


def build_cf_model(ratings: RatingsData, side: SideInfo | None, cfg: CfConfig, seed: int) -> TgpModel:
    """
    Return the D=2 TGP model of the ratings with parameters drawn from the prior.

    Keyword arguments:
    ratings -- the ratings, fixing the numbers of users and items
    side -- the side information, needed when cfg.use_side is set
    cfg -- the model settings
    seed -- the seed of the prior draw
    """
    maps = build_feature_maps(ratings, side, cfg)
    dims = [feature_map.output_len for feature_map in maps]
    weights = sample_prior(dims, cfg.rank, 2, cfg.prior_u_var, cfg.prior_w_var, seed)
    model = TgpModel(maps, weights, cfg.noise_var, cfg.prior_u_var, cfg.prior_w_var, learn_w=cfg.learn_w)
    if not cfg.learn_w:
        hold_core_at_identity(model)
    return model


def _side_row(
    feature_map: FeatureMap, factor: np.ndarray, index: int, side_lookup: Callable[[int], np.ndarray] | None
) -> np.ndarray:
    if isinstance(feature_map, SideAugmentedFeatures):
        if not 0 <= index < feature_map.cardinality:
            raise ContractViolationError(f"Index {index} out of range [0, {feature_map.cardinality})")
        try:
            index_set = feature_map.index_set(index) if side_lookup is None else side_lookup(index)
        except IndexError as error:
            raise ContractViolationError(f"No side vector for index {index}") from error
        side_rows = factor[feature_map.cardinality + np.asarray(index_set, dtype=np.int64)]
        return feature_map.a * factor[index] + feature_map.b * side_rows.sum(axis=0)
    if not 0 <= index < factor.shape[0]:
        raise ContractViolationError(f"Index {index} out of range [0, {factor.shape[0]})")
    return factor[index]


def predict_rating(model: TgpModel, i: int, j: int, side: SideInfo | None = None) -> float:
    """
    Return the predicted rating of user i for item j through the reparametrised form,
    in O(r^2 + |I_i| r + |J_j| r).

    Keyword arguments:
    model -- a D=2 collaborative-filtering model
    i -- the user index
    j -- the item index
    side -- side information overriding the index sets stored in the feature maps
    """
    user_map, item_map = model.maps
    user_factor, item_factor = model.weights.factors
    left = _side_row(user_map, user_factor, i, side.user_index_set if side is not None else None)
    right = _side_row(item_map, item_factor, j, side.item_index_set if side is not None else None)
    return float(left @ model.weights.core.array @ right)


def bpmf_core(mu_u: np.ndarray, mu_v: np.ndarray, l_u: np.ndarray, l_v: np.ndarray) -> np.ndarray:
    """
    Return the (r+1) x (r+1) core [[L_u^T L_v, L_u^T mu_v], [mu_u^T L_v, mu_u^T mu_v]].
    """
    top = np.hstack([l_u.T @ l_v, (l_u.T @ mu_v)[:, np.newaxis]])
    bottom = np.append(mu_u @ l_v, mu_u @ mu_v)
    return np.vstack([top, bottom])


def bpmf_reparam_check(
    mu_u: np.ndarray,
    mu_v: np.ndarray,
    l_u: np.ndarray,
    l_v: np.ndarray,
    u_i: np.ndarray,
    v_j: np.ndarray,
) -> tuple[float, float]:
    """
    Return both sides of (mu_u + L_u u_i)^T (mu_v + L_v v_j) = [u_i^T, 1] W [v_j; 1],
    W being bpmf_core, the identity showing a learned core can stand in for the
    hierarchical means and covariances.
    """
    mu_u, mu_v, u_i, v_j = (np.asarray(vector, dtype=float) for vector in (mu_u, mu_v, u_i, v_j))
    l_u, l_v = np.asarray(l_u, dtype=float), np.asarray(l_v, dtype=float)
    r = mu_u.size
    if not (mu_v.size == u_i.size == v_j.size == r and l_u.shape == l_v.shape == (r, r)):
        raise ContractViolationError("Inconsistent shapes in the reparametrisation check")
    lhs = float((mu_u + l_u @ u_i) @ (mu_v + l_v @ v_j))
    rhs = float(np.append(u_i, 1.0) @ bpmf_core(mu_u, mu_v, l_u, l_v) @ np.append(v_j, 1.0))
    return lhs, rhs


def rmse(predictor: Callable[[np.ndarray, np.ndarray], np.ndarray], test: RatingsData, clip: bool = False) -> float:
    """
    Return the root mean squared error of a predictor on test triples.

    Keyword arguments:
    predictor -- a function of (users, items) arrays returning predicted ratings
    test -- the test triples
    clip -- whether predictions are clipped to the rating range first
    """
    if len(test) == 0:
        raise ContractViolationError("RMSE of an empty test set")
    predictions = np.asarray(predictor(test.users, test.items), dtype=float)
    if clip:
        predictions = np.clip(predictions, RATING_MIN, RATING_MAX)
    return float(np.sqrt(np.mean((predictions - test.ratings) ** 2)))


@dataclass
class CfFit:
    """
    A fitted collaborative-filtering model.

    Attributes:
    model -- the fitted model, on centred ratings
    rating_mean -- the training mean added back to predictions
    trace -- the metric trace of the fit
    """

    model: TgpModel
    rating_mean: float = 0.0
    trace: MetricTrace | None = None

    def __call__(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        inputs = np.column_stack([users, items]).astype(float)
        return predict_batch(self.model, inputs) + self.rating_mean


def reset_unseen_rows(model: TgpModel, train: RatingsData) -> None:
    """
    Reset the factor rows of users and items absent from the training ratings to their prior
    mean zero. Side-feature rows are kept, so cold-start predictions come from side information.
    """
    for factor, seen, count in (
        (model.weights.factors[0], train.users, train.n_users),
        (model.weights.factors[1], train.items, train.n_items),
    ):
        unseen = np.setdiff1d(np.arange(count), seen)
        if unseen.size:
            logger.warning("%d of %d rows unseen in training reset to zero", unseen.size, count)
            factor[unseen] = 0.0


def fit_cf(
    train: RatingsData,
    side: SideInfo | None,
    cfg: CfConfig,
    sgd: SgdConfig,
    valid: RatingsData | None = None,
    seed: int = 0,
    center: bool = True,
) -> CfFit:
    """
    Return the model fitted by stochastic gradient MAP on the training ratings.

    Keyword arguments:
    train -- the training ratings
    side -- the side information
    cfg -- the model settings
    sgd -- the optimiser settings, its learn_w flag is taken from cfg
    valid -- ratings whose RMSE is traced during training
    seed -- the seed of the prior draw
    center -- whether the training mean rating is subtracted before fitting
    """
    rating_mean = train.mean_rating if center else 0.0
    model = build_cf_model(train, side, cfg, seed)
    fitted, trace = sgd_map(
        model,
        train.to_dataset(rating_mean),
        valid.to_dataset(rating_mean) if valid is not None else None,
        replace(sgd, learn_w=cfg.learn_w),
    )
    reset_unseen_rows(fitted, train)
    return CfFit(fitted, rating_mean, trace)
