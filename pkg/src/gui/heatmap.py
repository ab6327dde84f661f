"""
Renders value grids as greyscale PGM images and colour PNG heatmaps.
Grids are y-major: row k holds the values at the k-th y value, drawn with the highest y at the top.
"""

from __future__ import annotations

import os
import pathlib
import tempfile
from collections.abc import Sequence

import numpy as np
from scipy import stats

from src.constants import HEATMAP_CELL_PIXELS, PGM_MAXVAL
from src.errors import ContractViolationError
from src.services.save_state_manager import write_atomic

os.environ.setdefault("PYGAME_HIDE_SUPPORT_PROMPT", "1")
import pygame  # noqa: E402

LOW_COLOUR = np.array([49, 54, 149])
HIGH_COLOUR = np.array([215, 48, 39])
SHADINGS = ("percentile", "uniform")


def shade(grids: Sequence[np.ndarray], shading: str = "percentile") -> list[np.ndarray]:
    """
    Return the grey level of every value on a scale shared by all grids: its percentile among
    the values of all grids, or its linear position between their minimum and maximum.
    """
    if shading not in SHADINGS:
        raise ContractViolationError(f"Unknown shading '{shading}', expected one of {list(SHADINGS)}")
    values = np.concatenate([np.ravel(grid) for grid in grids]).astype(float)
    levels = np.zeros(values.size, dtype=np.int64)
    if shading == "percentile" and values.size > 1:
        ranks = stats.rankdata(values, method="average")
        levels = np.rint((ranks - 1) / (values.size - 1) * PGM_MAXVAL).astype(np.int64)
    elif shading == "uniform" and values.size and np.ptp(values) > 0:
        levels = np.rint((values - values.min()) / np.ptp(values) * PGM_MAXVAL).astype(np.int64)
    shaded, start = [], 0
    for grid in grids:
        grid = np.asarray(grid)
        shaded.append(levels[start : start + grid.size].reshape(grid.shape))
        start += grid.size
    return shaded


def pgm_text(levels: np.ndarray) -> str:
    """
    Return the plain (P2) PGM image of a grid of grey levels.
    """
    rows = np.flipud(np.asarray(levels, dtype=np.int64))
    height, width = rows.shape
    lines = ["P2", f"{width} {height}", str(PGM_MAXVAL)]
    lines.extend(" ".join(str(level) for level in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_pgm(path, levels: np.ndarray) -> pathlib.Path:
    return write_atomic(path, pgm_text(levels))


def colour_surface(levels: np.ndarray, cell: int = HEATMAP_CELL_PIXELS) -> pygame.Surface:
    """
    Return a surface painting every grid value as a cell x cell square, from blue for
    the lowest level to red for the highest.
    """
    rows = np.flipud(np.asarray(levels, dtype=float)) / PGM_MAXVAL
    rgb = LOW_COLOUR + rows[..., np.newaxis] * (HIGH_COLOUR - LOW_COLOUR)
    surface = pygame.surfarray.make_surface(np.transpose(np.rint(rgb).astype(np.uint8), (1, 0, 2)))
    height, width = rows.shape
    return pygame.transform.scale(surface, (width * cell, height * cell))


def write_png(path, levels: np.ndarray, cell: int = HEATMAP_CELL_PIXELS) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    descriptor, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.stem}.", suffix=".png")
    os.close(descriptor)
    try:
        pygame.image.save(colour_surface(levels, cell), temporary)
        os.replace(temporary, path)
    except BaseException:
        pathlib.Path(temporary).unlink(missing_ok=True)
        raise
    return path
