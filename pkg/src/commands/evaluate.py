"""
Define EvalCommand class, scoring a saved model on held-out data.
"""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd

from src.commands.command import Command
from src.constants import LOWER_PERCENTILE, RATING_MAX, RATING_MIN, UPPER_PERCENTILE
from src.datasets import RegressionDataset
from src.errors import EncoderMismatchError
from src.inference.chain_set import posterior_predict
from src.model.tgp_model import TgpModel, predict_batch
from src.services.load_from_csv_manager import encode_regression
from src.services.load_from_movielens_manager import load_ratings_file
from src.services.load_from_xml_manager import ModelFile, load_model_file
from src.services.save_state_manager import write_csv

logger = logging.getLogger(__name__)

LOWER_COLUMN = f"p{LOWER_PERCENTILE:g}"
UPPER_COLUMN = f"p{UPPER_PERCENTILE:g}"


def check_input_width(model: TgpModel, data: RegressionDataset) -> None:
    needed = max(max(feature_map.columns) for feature_map in model.maps) + 1
    if data.inputs.shape[1] < needed:
        raise EncoderMismatchError(f"The model reads {needed} input columns, the data has {data.inputs.shape[1]}")


def encode_file(saved: ModelFile, path, require_target: bool = True) -> RegressionDataset:
    """
    Return a data file encoded like the training data of a saved model, ratings centred.
    """
    encoder = saved.encoder
    if encoder.kind == "ratings":
        ratings = load_ratings_file(path, encoder.n_users, encoder.n_items)
        data = ratings.to_dataset(encoder.rating_mean)
    else:
        data = encode_regression(encoder, path, require_target=require_target)
    check_input_width(saved.model, data)
    return data


def predict_saved(saved: ModelFile, data: RegressionDataset) -> dict[str, np.ndarray]:
    """
    Return the predictions of a saved model in the encoded target units: the posterior mean
    with its percentile band for sampled models, the point prediction otherwise.
    """
    if saved.chains is not None:
        mean, lower, upper = posterior_predict(saved.chains, saved.model.maps, data.inputs)
        return {"mean": mean, LOWER_COLUMN: lower, UPPER_COLUMN: upper}
    return {"prediction": predict_batch(saved.model, data.inputs)}


class EvalCommand(Command):
    """
    Writes eval.csv, the prediction of every test row next to its target, and
    eval_summary.csv with the test RMSE. Ratings are scored in rating units,
    tabular data in whitened units.
    """

    name = "eval"

    def run(self) -> None:
        saved = load_model_file(self.arguments.model)
        data = encode_file(saved, self.arguments.data)
        predictions = predict_saved(saved, data)
        targets = data.targets
        if saved.encoder.kind == "ratings":
            targets = targets + saved.encoder.rating_mean
            predictions = {name: values + saved.encoder.rating_mean for name, values in predictions.items()}
            if getattr(self.arguments, "clip", False):
                predictions = {name: np.clip(values, RATING_MIN, RATING_MAX) for name, values in predictions.items()}
        point = predictions.get("mean", predictions.get("prediction"))
        score = float(np.sqrt(np.mean((point - targets) ** 2)))

        directory = self.output_directory()
        frame = pd.DataFrame({"row": np.arange(len(data)), "target": targets, **predictions})
        self.record(write_csv(directory / "eval.csv", frame))
        summary = pd.DataFrame({"metric": ["rmse", "rows"], "value": [score, float(len(data))]})
        self.record(write_csv(directory / "eval_summary.csv", summary))
        logger.info("RMSE %.6f on %d rows", score, len(data))
        print(f"RMSE {score:.6f}")
        self.write_manifest(directory)