"""
Define PredictCommand class, predicting targets of new inputs with a saved model.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from src.commands.command import Command
from src.commands.evaluate import check_input_width, encode_file, predict_saved
from src.datasets import RegressionDataset
from src.services.load_from_csv_manager import decode_targets
from src.services.load_from_movielens_manager import load_pairs_file
from src.services.load_from_xml_manager import load_model_file
from src.services.save_state_manager import write_csv


class PredictCommand(Command):
    """
    Writes predictions.csv holding one prediction per input row, in raw target units.
    Rating inputs are tab-separated (user, item) lines, tabular inputs hold the covariate columns.
    """

    name = "predict"

    def run(self) -> None:
        saved = load_model_file(self.arguments.model)
        encoder = saved.encoder
        if encoder.kind == "ratings":
            users, items = load_pairs_file(self.arguments.data, encoder.n_users, encoder.n_items)
            data = RegressionDataset(np.column_stack([users, items]), np.zeros(users.size), ("user", "item"))
            check_input_width(saved.model, data)
            predictions = {
                name: values + encoder.rating_mean for name, values in predict_saved(saved, data).items()
            }
        else:
            data = encode_file(saved, self.arguments.data, require_target=False)
            predictions = {name: decode_targets(encoder, values) for name, values in predict_saved(saved, data).items()}

        directory = self.output_directory()
        frame = pd.DataFrame({"row": np.arange(len(data)), **predictions})
        self.record(write_csv(directory / "predictions.csv", frame))
        self.write_manifest(directory)
