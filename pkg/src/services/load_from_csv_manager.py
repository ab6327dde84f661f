"""
Loaders of delimited regression tables and of the Irish wind data, with the whitening,
splitting and grid-building steps turning them into model inputs.
"""

from __future__ import annotations

import logging
import pathlib
from collections.abc import Sequence

import numpy as np
import pandas as pd
from scipy import spatial

from src.constants import GRID_MATCH_TOLERANCE
from src.datasets import DataEncoder, GridSpec, RegressionDataset
from src.errors import ContractViolationError, DataLoadError, EncoderMismatchError

logger = logging.getLogger(__name__)

TRANSFORMS = {"identity": lambda values: values, "log": np.log}
WIND_LOCATION_FIELDS = ("code", "longitude", "latitude")
WIND_DATE_FIELDS = ("year", "month", "day")
WIND_COLUMNS = ("longitude", "latitude", "day")
WIND_TARGET = "speed"


def _read_frame(path: pathlib.Path, delimiter: str) -> pd.DataFrame:
    if not path.is_file():
        raise DataLoadError("Missing file", path)
    try:
        return pd.read_csv(path, sep=delimiter, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as error:
        raise DataLoadError(f"Malformed file: {error}", path) from error


def _numeric(frame: pd.DataFrame, column: str, path: pathlib.Path, required: bool = True) -> np.ndarray:
    """
    Return a column as floats, reporting the file line (header being line 1) of the first bad value.
    """
    if column not in frame.columns:
        if required:
            raise DataLoadError(f"Missing column '{column}'", path)
        return np.zeros(0)
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=float)
    invalid = ~np.isfinite(values)
    if invalid.any():
        raise DataLoadError(f"Non-numeric value in column '{column}'", path, int(np.argmax(invalid)) + 2)
    return values


def _transform(values: np.ndarray, kind: str, column: str, path) -> np.ndarray:
    if kind not in TRANSFORMS:
        raise DataLoadError(f"Unknown transform '{kind}' of column '{column}'", path)
    if kind == "log" and np.any(values <= 0):
        raise DataLoadError(f"Log transform of non-positive values in column '{column}'", path)
    return TRANSFORMS[kind](values)


def load_csv_regression(
    path,
    covariates: Sequence[str],
    target: str,
    transforms: dict[str, str] | None = None,
    delimiter: str = ",",
    require_target: bool = True,
) -> RegressionDataset:
    """
    Load the named covariates and target of a delimited table with a header line.

    Return the dataset, transforms applied.

    Keyword arguments:
    path -- the path of the table
    covariates -- the covariate columns, in model input order
    target -- the target column
    transforms -- the transform applied to some columns, such as {"median_house_value": "log"}
    delimiter -- the field separator
    require_target -- whether a missing target column is an error, otherwise targets are zero
    """
    path = pathlib.Path(path)
    transforms = transforms or {}
    frame = _read_frame(path, delimiter)
    columns = []
    for column in covariates:
        columns.append(_transform(_numeric(frame, column, path), transforms.get(column, "identity"), column, path))
    targets = _numeric(frame, target, path, require_target)
    if targets.size:
        targets = _transform(targets, transforms.get(target, "identity"), target, path)
    else:
        targets = np.zeros(len(frame))
    inputs = np.column_stack(columns) if columns else np.zeros((len(frame), 0))
    logger.info("loaded %d rows of %d covariates from %s", len(frame), len(columns), path)
    return RegressionDataset(inputs, targets, tuple(covariates), target)


def whiten_fit_apply(
    train: RegressionDataset, others: Sequence[RegressionDataset] = ()
) -> tuple[RegressionDataset, list[RegressionDataset], dict[str, tuple[float, float]]]:
    """
    Whiten every covariate and the target to zero mean and unit population variance,
    statistics being computed on the training rows only.

    Return the whitened training data, the other datasets whitened alike and the statistics.
    """
    stats = {}
    for position, column in enumerate(train.columns):
        stats[column] = _column_stats(train.inputs[:, position], column)
    stats[train.target_name] = _column_stats(train.targets, train.target_name)
    return apply_whitening(train, stats), [apply_whitening(other, stats) for other in others], stats


def _column_stats(values: np.ndarray, column: str) -> tuple[float, float]:
    if values.size == 0:
        raise ContractViolationError(f"Cannot whiten empty column '{column}'")
    std = float(np.std(values))
    if std <= 0:
        raise ContractViolationError(f"Zero-variance column '{column}' cannot be whitened")
    return float(np.mean(values)), std


def apply_whitening(data: RegressionDataset, stats: dict[str, tuple[float, float]]) -> RegressionDataset:
    try:
        means = np.array([stats[column][0] for column in data.columns])
        stds = np.array([stats[column][1] for column in data.columns])
        target_mean, target_std = stats[data.target_name]
    except KeyError as error:
        raise EncoderMismatchError(f"No whitening statistics for column {error}") from error
    return RegressionDataset(
        (data.inputs - means) / stds,
        (data.targets - target_mean) / target_std,
        data.columns,
        data.target_name,
        stats,
    )


def split(
    data: RegressionDataset, ratio: float = 0.5, seed: int = 0, size: int | None = None
) -> tuple[RegressionDataset, RegressionDataset]:
    """
    Return a seeded random (train, test) partition, rows kept in their original order.

    Keyword arguments:
    data -- the dataset to split
    ratio -- the training fraction
    seed -- the seed of the permutation
    size -- the exact number of training rows, overriding ratio
    """
    count = int(round(ratio * len(data))) if size is None else int(size)
    if not 0 < count < len(data):
        raise ContractViolationError(f"Splitting {len(data)} rows with {count} for training is degenerate")
    permutation = np.random.default_rng(seed).permutation(len(data))
    return data.subset(np.sort(permutation[:count])), data.subset(np.sort(permutation[count:]))


def subsample(data: RegressionDataset, count: int, seed: int = 0) -> RegressionDataset:
    if count <= 0 or count >= len(data):
        return data
    rows = np.random.default_rng(seed).choice(len(data), size=count, replace=False)
    return data.subset(np.sort(rows))


def build_grid(data: RegressionDataset, groups: Sequence[Sequence[str]]) -> GridSpec:
    """
    Return the grid whose axes are the sorted unique values of every group of covariates.

    Keyword arguments:
    data -- the dataset laid out on the grid
    groups -- the covariates of every axis, such as [["longitude", "latitude"], ["day"]]
    """
    axes, indices = [], []
    for group in groups:
        missing = [column for column in group if column not in data.columns]
        if missing:
            raise ContractViolationError(f"Unknown grid columns {missing}")
        positions = [data.columns.index(column) for column in group]
        points, inverse = np.unique(data.inputs[:, positions], axis=0, return_inverse=True)
        axes.append(points)
        indices.append(np.asarray(inverse).ravel())
    return GridSpec(axes, np.column_stack(indices).astype(np.int64), tuple(tuple(group) for group in groups))


def grid_dataset(data: RegressionDataset, grid: GridSpec) -> RegressionDataset:
    """
    Return the dataset with its inputs replaced by grid multi-indices.
    """
    columns = tuple("+".join(group) for group in grid.groups)
    return RegressionDataset(grid.indices.astype(float), data.targets, columns, data.target_name, data.stats)


def locate_on_grid(
    data: RegressionDataset,
    axes: Sequence[np.ndarray],
    groups: Sequence[Sequence[str]],
    tolerance: float = GRID_MATCH_TOLERANCE,
) -> np.ndarray:
    """
    Return the multi-index of every row on existing grid axes, each row going to its nearest axis point.
    Raises EncoderMismatchError when that point is further than tolerance times the axis extent (at least 1).
    """
    indices = []
    for axis, group in zip(axes, groups):
        positions = [data.columns.index(column) for column in group]
        values = data.inputs[:, positions]
        points = np.asarray(axis, dtype=float).reshape(len(axis), -1)
        if len(values) == 0:
            indices.append(np.zeros(0, dtype=np.int64))
            continue
        distances, nearest = spatial.cKDTree(points).query(values)
        off_grid = distances > tolerance * max(1.0, float(np.ptp(points)))
        if off_grid.any():
            value = tuple(values[np.argmax(off_grid)].tolist())
            raise EncoderMismatchError(f"Value {value} is not on the grid axis of {list(group)}")
        indices.append(nearest)
    return np.column_stack(indices).astype(np.int64)


def load_wind(values_path, locations_path, delimiter: str = ",") -> RegressionDataset:
    """
    Load daily wind speeds measured at weather stations into one row per (station, day).

    Keyword arguments:
    values_path -- a table with year, month and day columns followed by one speed column per station code
    locations_path -- a table with code, longitude and latitude columns
    delimiter -- the field separator of both tables
    """
    values_path, locations_path = pathlib.Path(values_path), pathlib.Path(locations_path)
    values = _read_frame(values_path, delimiter)
    locations = _read_frame(locations_path, delimiter)
    for column in WIND_LOCATION_FIELDS:
        if column not in locations.columns:
            raise DataLoadError(f"Missing column '{column}'", locations_path)
    codes = [str(code).strip() for code in locations["code"]]
    longitudes = _numeric(locations, "longitude", locations_path)
    latitudes = _numeric(locations, "latitude", locations_path)
    missing = [code for code in codes if code not in values.columns]
    if missing:
        raise DataLoadError(f"No measurements for stations {missing}", values_path)

    years, months, days = (_numeric(values, column, values_path) for column in WIND_DATE_FIELDS)
    years = np.where(years < 100, years + 1900, years)
    dates = pd.to_datetime(
        pd.DataFrame({"year": years, "month": months, "day": days}).astype(int), errors="coerce"
    )
    if dates.isna().any():
        raise DataLoadError("Invalid date", values_path, int(np.argmax(dates.isna().to_numpy())) + 2)
    offsets = (dates - dates.min()).dt.days.to_numpy(dtype=float)

    rows, targets = [], []
    for code, longitude, latitude in zip(codes, longitudes, latitudes):
        speeds = _numeric(values, code, values_path)
        rows.append(np.column_stack([np.full(offsets.size, longitude), np.full(offsets.size, latitude), offsets]))
        targets.append(speeds)
    logger.info("loaded %d days at %d stations from %s", offsets.size, len(codes), values_path)
    return RegressionDataset(np.vstack(rows), np.concatenate(targets), WIND_COLUMNS, WIND_TARGET)


def encode_regression(encoder: DataEncoder, path, delimiter: str = ",", require_target: bool = True) -> RegressionDataset:
    """
    Return raw tabular data encoded like the training data of a regression or grid encoder.
    """
    if encoder.kind not in ("regression", "grid"):
        raise EncoderMismatchError(f"A {encoder.kind} encoder cannot encode tabular covariates")
    try:
        data = load_csv_regression(path, encoder.columns, encoder.target, encoder.transforms, delimiter, require_target)
    except DataLoadError as error:
        raise EncoderMismatchError(str(error)) from error
    stats = dict(encoder.stats)
    if not require_target and encoder.target not in stats:
        stats[encoder.target] = (0.0, 1.0)
    whitened = apply_whitening(data, stats)
    if encoder.kind == "regression":
        return whitened
    indices = locate_on_grid(whitened, encoder.axes, encoder.groups)
    columns = tuple("+".join(group) for group in encoder.groups)
    return RegressionDataset(indices.astype(float), whitened.targets, columns, whitened.target_name, stats)


def decode_targets(encoder: DataEncoder, values: np.ndarray) -> np.ndarray:
    """
    Return whitened model outputs in raw target units, undoing whitening then the target transform.
    """
    mean, std = encoder.stats.get(encoder.target, (0.0, 1.0))
    values = np.asarray(values, dtype=float) * std + mean
    if encoder.transforms.get(encoder.target) == "log":
        return np.exp(values)
    return values
