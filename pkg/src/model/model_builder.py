"""
Builds feature maps and models from the feature map recipes of a run, once the
training data is known.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any

import numpy as np

from src.datasets import GridSpec, RegressionDataset
from src.errors import ConfigError, ContractViolationError
from src.features.cholesky_grid import build_cholesky_features
from src.features.feature_map import FeatureMap
from src.features.hashed import HashedFeatures
from src.features.identity import IdentityFeatures
from src.features.nystrom import build_nystrom
from src.features.random_fourier import build_rff
from src.inference.sgd import hold_core_at_identity
from src.model.full_rank import full_rank_model
from src.model.tgp_model import TgpModel, sample_prior
from src.services.load_from_xml_manager import MapSpec


def _spec_error(spec: MapSpec, message: str) -> ConfigError:
    return ConfigError(f"{message} (line {spec.line})")


def _resolve_columns(spec: MapSpec, names: Sequence[str]) -> tuple[int, ...]:
    """
    Return the input positions named by the "columns" (or "column") attribute, given
    as covariate names or as 0-based positions.
    """
    text = spec.get("columns", spec.get("column"))
    if text is None:
        raise _spec_error(spec, f"A {spec.kind} feature map needs columns")
    positions = []
    for token in (token.strip() for token in str(text).split(",")):
        if token.isdigit():
            positions.append(int(token))
        elif token in names:
            positions.append(list(names).index(token))
        else:
            raise _spec_error(spec, f"Unknown column '{token}'")
    return tuple(positions)


def _integer(spec: MapSpec, key: str, default: Any = None) -> int:
    value = spec.get(key, default)
    if value is None:
        raise _spec_error(spec, f"A {spec.kind} feature map needs '{key}'")
    try:
        return int(value)
    except ValueError as error:
        raise _spec_error(spec, f"Invalid value '{value}' of '{key}'") from error


def build_feature_map(
    spec: MapSpec, data: RegressionDataset, mode: int, seed: int, grid: GridSpec | None = None
) -> FeatureMap:
    """
    Return the feature map of one mode.

    Keyword arguments:
    spec -- the recipe of the map
    data -- the training data, whose inputs the map reads
    mode -- the mode of the map, naming the default grid axis
    seed -- the seed used when the recipe gives none
    grid -- the grid of grid-structured data
    """
    map_seed = _integer(spec, "seed", seed)
    if spec.kind == "identity":
        column = _resolve_columns(spec, data.columns)[0]
        default_n = int(data.inputs[:, column].max()) + 1 if len(data) else None
        return IdentityFeatures(_integer(spec, "n", default_n), column)
    if spec.kind == "hashed":
        base = build_feature_map(spec.base, data, mode, seed, grid)
        return HashedFeatures(base, _integer(spec, "m"), map_seed)
    if spec.kind == "rff":
        try:
            return build_rff(spec.kernel, _integer(spec, "n"), map_seed, _resolve_columns(spec, data.columns))
        except ContractViolationError as error:
            raise _spec_error(spec, str(error)) from error
    if spec.kind == "nystrom":
        columns = _resolve_columns(spec, data.columns)
        count = _integer(spec, "n")
        if not 0 < count <= len(data):
            raise _spec_error(spec, f"Cannot pick {count} inducing points among {len(data)} rows")
        rows = np.sort(np.random.default_rng(map_seed).choice(len(data), size=count, replace=False))
        return build_nystrom(spec.kernel, data.inputs[np.ix_(rows, columns)], columns)
    if spec.kind == "cholesky":
        if grid is None:
            raise _spec_error(spec, "Cholesky features need grid-structured data")
        axis = _integer(spec, "axis", mode)
        if not 0 <= axis < len(grid.axes):
            raise _spec_error(spec, f"Axis {axis} out of range [0, {len(grid.axes)})")
        return build_cholesky_features([grid.axes[axis]], [spec.kernel], [axis])[0]
    raise _spec_error(spec, f"Unknown feature map type '{spec.kind}'")


def build_feature_maps(
    specs: Sequence[MapSpec], data: RegressionDataset, seed: int, grid: GridSpec | None = None
) -> list[FeatureMap]:
    if not specs:
        raise ConfigError("A model needs at least one feature map")
    return [build_feature_map(spec, data, mode, seed + mode + 1, grid) for mode, spec in enumerate(specs)]


def build_model(maps: Sequence[FeatureMap], section: dict[str, Any], seed: int) -> TgpModel:
    """
    Return the model described by the model section of a recipe, parameters drawn from the prior.

    Keyword arguments:
    maps -- the feature maps
    section -- the model section: rank, variances and the learn_w and full_rank flags
    seed -- the seed of the prior draw
    """
    if section["full_rank"]:
        return full_rank_model(maps, section["noise_var"], section["prior_w_var"], seed)
    weights = sample_prior(
        [feature_map.output_len for feature_map in maps],
        section["rank"],
        len(maps),
        section["prior_u_var"],
        section["prior_w_var"],
        seed,
    )
    model = TgpModel(
        maps, weights, section["noise_var"], section["prior_u_var"], section["prior_w_var"], learn_w=section["learn_w"]
    )
    if not section["learn_w"]:
        hold_core_at_identity(model)
    return model
