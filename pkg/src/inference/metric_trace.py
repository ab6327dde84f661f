"""
Defines MetricTrace class, the per-epoch or per-iteration record of a training run.
"""

from __future__ import annotations

import math

import numpy as np
import pandas as pd

TRACE_COLUMNS = ("epoch_or_iter", "train_rmse", "valid_rmse", "log_joint", "accept_rate")


class MetricTrace:
    """
    The rows of metrics recorded while training.
    Metrics a run does not compute (validation RMSE without validation data,
    acceptance rate outside HMC) stay NaN and are written as empty cells.

    Attributes:
    rows -- the recorded rows, in the order of TRACE_COLUMNS
    """

    def __init__(self) -> None:
        self.rows: list[tuple[int, float, float, float, float]] = []

    def record(
        self,
        step: int,
        train_rmse: float = math.nan,
        valid_rmse: float = math.nan,
        log_joint: float = math.nan,
        accept_rate: float = math.nan,
    ) -> None:
        self.rows.append((int(step), float(train_rmse), float(valid_rmse), float(log_joint), float(accept_rate)))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        position = TRACE_COLUMNS.index(name)
        return np.array([row[position] for row in self.rows])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=list(TRACE_COLUMNS))
