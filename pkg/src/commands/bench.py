"""
Define BenchCommand class, timing minibatch gradients over a sweep of sizes.
"""

from __future__ import annotations

import itertools
import logging
import time

import numpy as np
import pandas as pd

from src.commands.command import Command
from src.constants import BENCH_MIN_REPEATS
from src.datasets import RegressionDataset
from src.errors import ContractViolationError
from src.features.random_fourier import build_rff
from src.kernels.squared_exponential import SquaredExponential
from src.model.tgp_model import TgpModel, grad_log_joint, sample_prior
from src.services.save_state_manager import write_csv

logger = logging.getLogger(__name__)

SWEEP_KEYS = ("m", "n", "r", "D")
DEFAULT_SWEEP = "m=100,1000,10000;n=50;r=5;D=2"


def parse_sweep(text: str) -> dict[str, list[int]]:
    """
    Return the values of every swept size from "m=100,1000;n=50;r=5;D=2".
    """
    sweep = {}
    try:
        for token in filter(None, (token.strip() for token in text.split(";"))):
            key, _, values = token.partition("=")
            sweep[key.strip()] = [int(value) for value in values.split(",")]
    except ValueError as error:
        raise ContractViolationError(f"Invalid sweep '{text}'") from error
    missing = set(SWEEP_KEYS) - set(sweep)
    unknown = set(sweep) - set(SWEEP_KEYS)
    if missing or unknown:
        raise ContractViolationError(f"A sweep sets exactly {list(SWEEP_KEYS)}, got {sorted(sweep)}")
    if any(value < 1 for values in sweep.values() for value in values):
        raise ContractViolationError("Swept sizes must be positive")
    return sweep


def time_gradient(m: int, n: int, r: int, order: int, repeats: int, seed: int = 0) -> float:
    """
    Return the median time in seconds of one gradient of the log joint on a minibatch of m rows,
    for a model of order D with n random Fourier features and rank r per mode.
    """
    rng = np.random.default_rng(seed)
    maps = [build_rff(SquaredExponential(), n, seed + mode, (mode,)) for mode in range(order)]
    model = TgpModel(maps, sample_prior([n] * order, r, order, seed=seed))
    batch = RegressionDataset(rng.normal(size=(m, order)), rng.normal(size=m))
    grad_log_joint(model, batch)
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        grad_log_joint(model, batch)
        timings.append(time.perf_counter() - start)
    return float(np.median(timings))


class BenchCommand(Command):
    """
    Writes bench.csv, the median gradient time of every combination of swept sizes.
    """

    name = "bench"

    def run(self) -> None:
        sweep = parse_sweep(getattr(self.arguments, "sweep", None) or DEFAULT_SWEEP)
        repeats = getattr(self.arguments, "repeats", None) or BENCH_MIN_REPEATS
        if repeats < BENCH_MIN_REPEATS:
            raise ContractViolationError(f"At least {BENCH_MIN_REPEATS} repeats are needed, got {repeats}")
        seed = getattr(self.arguments, "seed", None) or 0
        self.seeds["bench"] = seed
        rows = []
        for m, n, r, order in itertools.product(*(sweep[key] for key in SWEEP_KEYS)):
            seconds = time_gradient(m, n, r, order, repeats, seed)
            logger.info("m=%d n=%d r=%d D=%d: %.6f s", m, n, r, order, seconds)
            rows.append({"m": m, "n": n, "r": r, "D": order, "repeats": repeats, "median_seconds": seconds})
        directory = self.output_directory()
        frame = pd.DataFrame(rows)
        self.record(write_csv(directory / "bench.csv", frame))
        print(frame.to_string(index=False))
        self.write_manifest(directory)
