"""
Define DecomposeCommand class, mapping every additive component of a two-mode model over a 2-D grid.
"""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd

from src.commands.command import Command
from src.datasets import RegressionDataset
from src.errors import ContractViolationError
from src.gui.heatmap import SHADINGS, shade, write_pgm, write_png
from src.model.tgp_model import additive_components_batch
from src.services.load_from_csv_manager import apply_whitening, locate_on_grid
from src.services.load_from_xml_manager import load_model_file
from src.services.save_state_manager import write_csv

logger = logging.getLogger(__name__)

FORMATS = ("csv", "pgm", "png")


def parse_grid(text: str) -> tuple[np.ndarray, np.ndarray]:
    """
    Return the x and y values of a grid given as "x0:x1:nx,y0:y1:ny", endpoints included.
    """
    try:
        axes = []
        for token in text.split(","):
            start, stop, count = token.split(":")
            if int(count) < 1:
                raise ValueError(count)
            axes.append(np.linspace(float(start), float(stop), int(count)))
        x_values, y_values = axes
    except ValueError as error:
        raise ContractViolationError(f"Invalid grid '{text}', expected x0:x1:nx,y0:y1:ny") from error
    return x_values, y_values


class DecomposeCommand(Command):
    """
    Writes one value grid per additive component W_ij psi_1(x)_i psi_2(x)_j, and one for their
    total, as CSV, PGM and PNG files. Sampled models are decomposed at their last draw.
    Grid values are raw covariates for tabular models, indices for rating and grid models.
    """

    name = "decompose"

    def run(self) -> None:
        saved = load_model_file(self.arguments.model)
        model, encoder = saved.model, saved.encoder
        if saved.chains is not None:
            model = model.with_weights(saved.chains.last())
        if model.order != 2:
            raise ContractViolationError(f"Decomposition maps need a two-mode model, got {model.order} modes")
        formats = [token.strip() for token in getattr(self.arguments, "formats", "csv,pgm").split(",") if token.strip()]
        unknown = set(formats) - set(FORMATS)
        if unknown:
            raise ContractViolationError(f"Unknown formats {sorted(unknown)}, expected {list(FORMATS)}")
        shading = getattr(self.arguments, "shading", "percentile")
        if shading not in SHADINGS:
            raise ContractViolationError(f"Unknown shading '{shading}', expected one of {list(SHADINGS)}")

        x_values, y_values = parse_grid(self.arguments.grid)
        xs, ys = np.meshgrid(x_values, y_values)
        points = np.column_stack([xs.ravel(), ys.ravel()])
        if encoder.kind == "regression":
            if len(encoder.columns) != 2:
                raise ContractViolationError(f"Decomposition maps need two covariates, got {len(encoder.columns)}")
            raw = RegressionDataset(points, np.zeros(len(points)), encoder.columns, encoder.target)
            inputs = apply_whitening(raw, encoder.stats).inputs
        elif encoder.kind == "grid" and all(len(group) == 1 for group in encoder.groups):
            columns = tuple(group[0] for group in encoder.groups)
            raw = RegressionDataset(points, np.zeros(len(points)), columns, encoder.target)
            whitened = apply_whitening(raw, encoder.stats)
            inputs = locate_on_grid(whitened, encoder.axes, encoder.groups).astype(float)
        else:
            inputs = points

        components = additive_components_batch(model, inputs)
        shape = (y_values.size, x_values.size)
        grids = {
            f"component_{i}_{j}": components[:, i, j].reshape(shape)
            for i in range(components.shape[1])
            for j in range(components.shape[2])
        }
        total = components.sum(axis=(1, 2)).reshape(shape)
        levels = dict(zip(grids, shade(list(grids.values()), shading)))
        levels["total"] = shade([total], shading)[0]
        grids["total"] = total

        directory = self.output_directory()
        for name, grid in grids.items():
            if "csv" in formats:
                frame = pd.DataFrame({"x": xs.ravel(), "y": ys.ravel(), "value": grid.ravel()})
                self.record(write_csv(directory / f"{name}.csv", frame))
            if "pgm" in formats:
                self.record(write_pgm(directory / f"{name}.pgm", levels[name]))
            if "png" in formats:
                self.record(write_png(directory / f"{name}.png", levels[name]))
        logger.info("wrote %d component maps to %s", len(grids), directory)
        self.write_manifest(directory)
