"""
Loaders of the MovieLens-100k files: u.data style rating triples, the u.user demographics
and the u.item genre flags, turned into RatingsData and binary SideInfo.
"""

from __future__ import annotations

import logging
import pathlib
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import sparse

from src.cf.ratings import RatingsData, SideInfo
from src.constants import (
    AGE_BIN_EDGES,
    GENDERS,
    GENRES,
    MOVIELENS_SPLITS,
    OCCUPATION_ALIASES,
    OCCUPATIONS,
)
from src.errors import DataLoadError

logger = logging.getLogger(__name__)

RATING_FIELDS = ("user", "item", "rating", "timestamp")
USER_FIELDS = ("user", "age", "gender", "occupation", "zip")
ITEM_FIELDS = ("item", "title", "release", "video_release", "url", "unknown") + GENRES
ENCODING = "latin-1"


def _read_table(path: pathlib.Path, sep: str, names: tuple[str, ...]) -> pd.DataFrame:
    if not path.is_file():
        raise DataLoadError("Missing file", path)
    try:
        frame = pd.read_csv(
            path,
            sep=sep,
            header=None,
            names=list(names),
            dtype=str,
            keep_default_na=False,
            encoding=ENCODING,
        )
    except pd.errors.ParserError as error:
        raise DataLoadError(f"Malformed file: {error}", path) from error
    missing = frame.isna().any(axis=1).to_numpy()
    if missing.any():
        raise DataLoadError("Missing fields", path, int(np.argmax(missing)) + 1)
    return frame


def _integer_column(frame: pd.DataFrame, column: str, path: pathlib.Path) -> np.ndarray:
    values = pd.to_numeric(frame[column].str.strip(), errors="coerce")
    invalid = values.isna() | (values != values.round())
    if invalid.any():
        raise DataLoadError(f"Invalid {column}", path, int(np.argmax(invalid.to_numpy())) + 1)
    return values.to_numpy().astype(np.int64)


def _check_ids(ids: np.ndarray, count: int, name: str, path: pathlib.Path) -> None:
    invalid = (ids < 1) | (ids > count)
    if invalid.any():
        raise DataLoadError(f"{name} id out of range [1, {count}]", path, int(np.argmax(invalid)) + 1)


def load_ratings_file(path, n_users: int, n_items: int) -> RatingsData:
    """
    Load tab-separated (user, item, rating, timestamp) lines with 1-based ids.

    Return the triples with 0-based indices.

    Keyword arguments:
    path -- the path of the ratings file
    n_users -- the number of users
    n_items -- the number of items
    """
    path = pathlib.Path(path)
    frame = _read_table(path, "\t", RATING_FIELDS)
    users = _integer_column(frame, "user", path)
    items = _integer_column(frame, "item", path)
    _check_ids(users, n_users, "User", path)
    _check_ids(items, n_items, "Item", path)
    ratings = pd.to_numeric(frame["rating"].str.strip(), errors="coerce").to_numpy(dtype=float)
    if np.isnan(ratings).any():
        raise DataLoadError("Invalid rating", path, int(np.argmax(np.isnan(ratings))) + 1)
    return RatingsData(n_users, n_items, users - 1, items - 1, ratings)


def user_side_vectors(path) -> sparse.csr_matrix:
    """
    Load the demographics file and return one binary row per user:
    one-hot age bin, one-hot gender and one-hot occupation.
    """
    path = pathlib.Path(path)
    frame = _read_table(path, "|", USER_FIELDS)
    users = _integer_column(frame, "user", path)
    ages = _integer_column(frame, "age", path)
    if not np.array_equal(np.sort(users), np.arange(1, users.size + 1)):
        raise DataLoadError("User ids must be 1..n without gaps", path)
    rows, columns = [], []
    occupation_offset = len(AGE_BIN_EDGES) + 1 + len(GENDERS)
    for position, (user, age, gender, occupation) in enumerate(
        zip(users, ages, frame["gender"].str.strip(), frame["occupation"].str.strip().str.lower())
    ):
        occupation = OCCUPATION_ALIASES.get(occupation, occupation)
        if gender not in GENDERS:
            raise DataLoadError(f"Unknown gender '{gender}'", path, position + 1)
        if occupation not in OCCUPATIONS:
            raise DataLoadError(f"Unknown occupation '{occupation}'", path, position + 1)
        rows.extend([user - 1] * 3)
        columns.extend(
            [
                int(np.digitize(age, AGE_BIN_EDGES)),
                len(AGE_BIN_EDGES) + 1 + GENDERS.index(gender),
                occupation_offset + OCCUPATIONS.index(occupation),
            ]
        )
    shape = (users.size, occupation_offset + len(OCCUPATIONS))
    return sparse.csr_matrix((np.ones(len(rows)), (rows, columns)), shape=shape)


def item_side_vectors(path) -> sparse.csr_matrix:
    """
    Load the item file and return the binary genre flags of every item.
    The "unknown" genre is not a side feature.
    """
    path = pathlib.Path(path)
    frame = _read_table(path, "|", ITEM_FIELDS)
    items = _integer_column(frame, "item", path)
    if not np.array_equal(np.sort(items), np.arange(1, items.size + 1)):
        raise DataLoadError("Item ids must be 1..n without gaps", path)
    flags = np.column_stack([_integer_column(frame, genre, path) for genre in GENRES])
    invalid = ~np.isin(flags, (0, 1)).all(axis=1)
    if invalid.any():
        raise DataLoadError("Genre flags must be 0 or 1", path, int(np.argmax(invalid)) + 1)
    ordered = np.zeros_like(flags)
    ordered[items - 1] = flags
    return sparse.csr_matrix(ordered.astype(float))


@dataclass
class MovieLensData:
    """
    Attributes:
    side -- the side information of all users and items
    splits -- the (train, test) ratings of every predefined split
    """

    side: SideInfo
    splits: dict[str, tuple[RatingsData, RatingsData]]

    @property
    def n_users(self) -> int:
        return self.side.user_vectors.shape[0]

    @property
    def n_items(self) -> int:
        return self.side.item_vectors.shape[0]


def load_movielens(directory, splits: tuple[str, ...] = MOVIELENS_SPLITS) -> MovieLensData:
    """
    Load a MovieLens-100k directory holding u.user, u.item and <split>.base / <split>.test files.

    Keyword arguments:
    directory -- the dataset directory
    splits -- the names of the splits to load
    """
    directory = pathlib.Path(directory)
    if not directory.is_dir():
        raise DataLoadError("Missing dataset directory", directory)
    side = SideInfo(user_side_vectors(directory / "u.user"), item_side_vectors(directory / "u.item"))
    n_users, n_items = side.user_vectors.shape[0], side.item_vectors.shape[0]
    loaded = {}
    for name in splits:
        train = load_ratings_file(directory / f"{name}.base", n_users, n_items)
        test = load_ratings_file(directory / f"{name}.test", n_users, n_items)
        logger.info("split %s: %d training and %d test ratings", name, len(train), len(test))
        loaded[name] = (train, test)
    return MovieLensData(side, loaded)


def load_pairs_file(path, n_users: int, n_items: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Load tab-separated lines starting with 1-based (user, item) ids, further fields ignored.

    Return the 0-based user and item indices.
    """
    path = pathlib.Path(path)
    if not path.is_file():
        raise DataLoadError("Missing file", path)
    try:
        frame = pd.read_csv(path, sep="\t", header=None, usecols=[0, 1], names=["user", "item"], dtype=str)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as error:
        raise DataLoadError(f"Malformed file: {error}", path) from error
    users = _integer_column(frame.fillna(""), "user", path)
    items = _integer_column(frame.fillna(""), "item", path)
    _check_ids(users, n_users, "User", path)
    _check_ids(items, n_items, "Item", path)
    return users - 1, items - 1
