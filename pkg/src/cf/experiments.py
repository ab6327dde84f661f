"""
Hyperparameter grid search on a held-out validation fraction and the per-split
test RMSE report of the collaborative-filtering variants.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import repeat

import numpy as np
import pandas as pd

from src.cf.cf_model import CfConfig, fit_cf, rmse
from src.cf.ratings import RatingsData, SideInfo
from src.constants import CF_DEFAULT_RANK, FIXED_W_GRID, LEARNED_W_GRID, SIDE_INFO_GRID, VALIDATION_FRACTION
from src.errors import ConfigError, ContractViolationError, NumericalError
from src.inference.sgd import SgdConfig

logger = logging.getLogger(__name__)

MODEL_VARIANTS = {
    "pmf": {"learn_w": False, "use_side": False},
    "tgp": {"learn_w": True, "use_side": False},
    "pmf-side": {"learn_w": False, "use_side": True},
    "tgp-side": {"learn_w": True, "use_side": True},
}
REPORT_COLUMNS = ("split", "model_variant", "r", "test_rmse")


def variant_config(variant: str, rank: int = CF_DEFAULT_RANK, **overrides) -> CfConfig:
    if variant not in MODEL_VARIANTS:
        raise ConfigError(f"Unknown model variant '{variant}', expected one of {sorted(MODEL_VARIANTS)}")
    return CfConfig(rank=rank, **MODEL_VARIANTS[variant], **overrides)


def variant_grid(variant: str) -> dict[str, tuple]:
    """
    Return the hyperparameter grid searched for a model variant.
    """
    cfg = variant_config(variant)
    return model_grid(cfg.learn_w, cfg.use_side)


def model_grid(learn_w: bool, use_side: bool) -> dict[str, tuple]:
    grid = dict(LEARNED_W_GRID if learn_w else FIXED_W_GRID)
    if use_side:
        grid.update(SIDE_INFO_GRID)
    return grid


def grid_cells(grid: dict[str, tuple]) -> list[dict[str, float]]:
    names = list(grid)
    return [dict(zip(names, values)) for values in itertools.product(*(grid[name] for name in names))]


def apply_cell(cfg: CfConfig, sgd: SgdConfig, cell: dict[str, float]) -> tuple[CfConfig, SgdConfig]:
    """
    Return the model and optimiser settings with the hyperparameters of a grid cell.
    """
    model_fields = {key: cell[key] for key in ("noise_var", "a", "b", "c") if key in cell}
    if "prior_u_std" in cell:
        model_fields["prior_u_var"] = cell["prior_u_std"] ** 2
    sgd_fields = {key: cell[key] for key in ("step_u", "step_w") if key in cell}
    unknown = set(cell) - set(model_fields) - set(sgd_fields) - {"prior_u_std"}
    if unknown:
        raise ConfigError(f"Unknown hyperparameters {sorted(unknown)}")
    return replace(cfg, **model_fields), replace(sgd, **sgd_fields)


def validation_split(
    ratings: RatingsData, fraction: float = VALIDATION_FRACTION, seed: int = 0
) -> tuple[RatingsData, RatingsData]:
    """
    Return a random (fit, validation) partition of the ratings, rows kept in their original order.
    """
    count = int(round(fraction * len(ratings)))
    if not 0 < count < len(ratings):
        raise ContractViolationError(f"Validation fraction {fraction} of {len(ratings)} ratings is degenerate")
    permutation = np.random.default_rng(seed).permutation(len(ratings))
    return ratings.subset(np.sort(permutation[count:])), ratings.subset(np.sort(permutation[:count]))


def _score_cell(
    cell: dict[str, float],
    fit: RatingsData,
    valid: RatingsData,
    side: SideInfo | None,
    cfg: CfConfig,
    sgd: SgdConfig,
    seed: int,
) -> float:
    cell_cfg, cell_sgd = apply_cell(cfg, sgd, cell)
    try:
        fitted = fit_cf(fit, side, cell_cfg, cell_sgd, seed=seed)
    except NumericalError as error:
        logger.warning("cell %s failed: %s", cell, error)
        return math.inf
    return rmse(fitted, valid)


@dataclass
class GridSearchResult:
    """
    Attributes:
    best -- the cell of lowest validation RMSE
    scores -- every cell with its validation RMSE, in grid order
    """

    best: dict[str, float]
    scores: list[tuple[dict[str, float], float]]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{**cell, "valid_rmse": score} for cell, score in self.scores])


def grid_search(
    train: RatingsData,
    side: SideInfo | None,
    cfg: CfConfig,
    sgd: SgdConfig,
    grid: dict[str, tuple] | None = None,
    seed: int = 0,
    workers: int = 1,
) -> GridSearchResult:
    """
    Return the grid cell whose model, fitted on 90% of the training ratings, has the lowest
    RMSE on the remaining 10%. Ties go to the earliest cell.

    Keyword arguments:
    train -- the training ratings
    side -- the side information
    cfg -- the model settings the cells override
    sgd -- the optimiser settings the cells override
    grid -- the values of every hyperparameter, the variant grid when None
    seed -- the seed of the validation split and of the fits
    workers -- the number of processes scoring cells
    """
    if grid is None:
        grid = model_grid(cfg.learn_w, cfg.use_side)
    cells = grid_cells(grid)
    fit, valid = validation_split(train, VALIDATION_FRACTION, seed)
    arguments = (repeat(fit), repeat(valid), repeat(side), repeat(cfg), repeat(sgd), repeat(seed))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(_score_cell, cells, *arguments))
    else:
        scores = list(map(_score_cell, cells, *arguments))
    if all(math.isinf(score) for score in scores):
        raise NumericalError("Every grid cell diverged")
    best_index = int(np.argmin(scores))
    logger.info("best cell %s with validation RMSE %.6f", cells[best_index], scores[best_index])
    return GridSearchResult(cells[best_index], list(zip(cells, scores)))


def split_report(
    splits: dict[str, tuple[RatingsData, RatingsData]],
    side: SideInfo | None,
    variants: list[str],
    sgd: SgdConfig,
    rank: int = CF_DEFAULT_RANK,
    seed: int = 0,
    tune: bool = True,
    shared: bool = False,
    workers: int = 1,
    center: bool = True,
    clip: bool = False,
    overrides: dict[str, float] | None = None,
) -> pd.DataFrame:
    """
    Return the test RMSE of every variant on every (train, test) split, followed by
    mean and std rows per variant.

    Keyword arguments:
    splits -- the train and test ratings of every split, by split name
    side -- the side information of the side variants
    variants -- the model variants
    sgd -- the optimiser settings
    rank -- the rank of every model
    seed -- the seed of prior draws, shuffles and validation splits
    tune -- whether hyperparameters are chosen by grid search
    shared -- whether hyperparameters tuned on the first split are reused for the others
    workers -- the number of processes of the grid search
    center -- whether ratings are centred on the training mean
    clip -- whether predictions are clipped to the rating range
    overrides -- model settings shared by every variant, such as noise_var or a
    """
    rows = []
    for variant in variants:
        cfg = variant_config(variant, rank, **(overrides or {}))
        tuned: dict[str, float] | None = None
        for name, (train, test) in splits.items():
            cell: dict[str, float] = {}
            if tune:
                if tuned is None or not shared:
                    tuned = grid_search(train, side, cfg, sgd, variant_grid(variant), seed, workers).best
                cell = tuned
            split_cfg, split_sgd = apply_cell(cfg, sgd, cell)
            fitted = fit_cf(train, side, split_cfg, split_sgd, seed=seed, center=center)
            score = rmse(fitted, test, clip)
            logger.info("%s on %s: test RMSE %.6f", variant, name, score)
            rows.append({"split": name, "model_variant": variant, "r": rank, "test_rmse": score})
    report = pd.DataFrame(rows, columns=list(REPORT_COLUMNS))
    summary = []
    for variant, scores in report.groupby("model_variant", sort=False)["test_rmse"]:
        summary.append({"split": "mean", "model_variant": variant, "r": rank, "test_rmse": scores.mean()})
        summary.append({"split": "std", "model_variant": variant, "r": rank, "test_rmse": scores.std(ddof=0)})
    return pd.concat([report, pd.DataFrame(summary, columns=list(REPORT_COLUMNS))], ignore_index=True)
