"""
Define TrainCommand class, running a recipe: loading its data, building and fitting its
model, then writing the model file, metric traces and the test report.
"""

from __future__ import annotations

import dataclasses
import logging
import pathlib

import numpy as np
import pandas as pd

from src.cf.cf_model import CfConfig, fit_cf, rmse
from src.cf.experiments import apply_cell, grid_search, split_report
from src.commands.command import Command
from src.constants import MOVIELENS_SPLITS
from src.datasets import DataEncoder, RegressionDataset
from src.errors import ConfigError
from src.inference.chain_set import posterior_predict
from src.inference.hmc import hmc
from src.inference.sgd import regression_rmse, sgd_map
from src.model.model_builder import build_feature_maps, build_model
from src.model.tgp_model import predict_batch
from src.services.load_from_csv_manager import (
    apply_whitening,
    build_grid,
    load_csv_regression,
    load_wind,
    locate_on_grid,
    split,
    subsample,
    whiten_fit_apply,
)
from src.services.load_from_movielens_manager import load_movielens
from src.services.load_from_xml_manager import RunConfig, load_run_config
from src.services.options_manager import data_path
from src.services.save_state_manager import SaveStateManager, write_csv

logger = logging.getLogger(__name__)

VARIANT_NAMES = {
    (False, False): "pmf",
    (True, False): "tgp",
    (False, True): "pmf-side",
    (True, True): "tgp-side",
}


def _parse_transforms(text: str) -> dict[str, str]:
    transforms = {}
    for token in filter(None, (token.strip() for token in text.split(","))):
        column, _, kind = token.partition(":")
        transforms[column] = kind or "identity"
    return transforms


def _parse_groups(text: str) -> list[list[str]]:
    return [group.split("+") for group in filter(None, (group.strip() for group in text.split(";")))]


class TrainCommand(Command):
    """
    Trains the model of a recipe.

    Attributes:
    config -- the run recipe
    """

    name = "train"

    def run(self) -> None:
        recipe = getattr(self.arguments, "recipe", None) or getattr(self.arguments, "config", None)
        if not recipe:
            raise ConfigError("No recipe given")
        self.config: RunConfig = load_run_config(recipe)
        if getattr(self.arguments, "seed", None) is not None:
            self.config = dataclasses.replace(self.config, seed=self.arguments.seed)
        self.seeds["run"] = self.config.seed
        directory = self.output_directory(
            self.config.output["directory"] or str(pathlib.Path("runs") / pathlib.Path(recipe).stem)
        )
        kind = self.config.data["kind"]
        if kind == "movielens":
            self.train_ratings(directory)
        elif kind in ("csv", "wind"):
            self.train_regression(directory)
        else:
            raise ConfigError(f"Unknown data kind '{kind}', expected movielens, csv or wind")
        self.write_manifest(directory, self.config.source)

    def train_ratings(self, directory: pathlib.Path) -> None:
        """
        Fit a collaborative-filtering model on a MovieLens split, or report every variant
        on every split when the recipe asks for it.
        """
        cfg, cf = self.config, self.config.cf
        if cfg.trainer != "sgd":
            raise ConfigError("Collaborative filtering trains with <sgd>")
        split_name = cfg.data["split"]
        names = MOVIELENS_SPLITS if split_name == "all" else (split_name,)
        movielens = load_movielens(data_path(cfg.data["path"]), names)
        sgd = cfg.sgd_config()
        side = movielens.side
        model_fields = {
            "noise_var": cfg.model["noise_var"],
            "prior_u_var": cfg.model["prior_u_var"],
            "prior_w_var": cfg.model["prior_w_var"],
            "a": cf["a"],
            "b": cf["b"],
            "c": cf["c"],
        }
        variants = [variant.strip() for variant in cf["variants"].split(",") if variant.strip()]
        if variants or split_name == "all":
            report = split_report(
                movielens.splits,
                side,
                variants or [VARIANT_NAMES[(cfg.model["learn_w"], cf["use_side"])]],
                sgd,
                cfg.model["rank"],
                cfg.seed,
                cf["tune"],
                cf["shared"],
                cf["workers"],
                cf["center"],
                cf["clip"],
                model_fields,
            )
            self.record(write_csv(directory / "report.csv", report))
            print(report.to_string(index=False))
            return

        train, test = movielens.splits[split_name]
        model_cfg = CfConfig(cfg.model["rank"], cfg.model["learn_w"], cf["use_side"], **model_fields)
        if cf["tune"]:
            search = grid_search(train, side, model_cfg, sgd, seed=cfg.seed, workers=cf["workers"])
            self.record(write_csv(directory / "grid.csv", search.to_frame()))
            model_cfg, sgd = apply_cell(model_cfg, sgd, search.best)
        fitted = fit_cf(train, side, model_cfg, sgd, seed=cfg.seed, center=cf["center"])
        score = rmse(fitted, test, cf["clip"])
        variant = VARIANT_NAMES[(model_cfg.learn_w, model_cfg.use_side)]
        logger.info("%s on %s: test RMSE %.6f", variant, split_name, score)
        print(f"test RMSE {score:.6f}")

        encoder = DataEncoder(
            "ratings",
            ("user", "item"),
            "rating",
            rating_mean=fitted.rating_mean,
            n_users=train.n_users,
            n_items=train.n_items,
        )
        self.record(SaveStateManager(fitted.model, encoder).save_model(directory / "model.xml"))
        self.record(write_csv(directory / "metrics.csv", fitted.trace.to_frame()))
        report = pd.DataFrame(
            [{"split": split_name, "model_variant": variant, "r": model_cfg.rank, "test_rmse": score}]
        )
        self.record(write_csv(directory / "report.csv", report))

    def _load_regression(self) -> RegressionDataset:
        data_cfg = self.config.data
        if data_cfg["kind"] == "wind":
            return load_wind(data_path(data_cfg["path"]), data_path(data_cfg["locations"]), data_cfg["delimiter"])
        covariates = [column.strip() for column in data_cfg["covariates"].split(",") if column.strip()]
        if not covariates or not data_cfg["target"]:
            raise ConfigError("A csv dataset needs covariates and a target")
        return load_csv_regression(
            data_path(data_cfg["path"]),
            covariates,
            data_cfg["target"],
            _parse_transforms(data_cfg["transforms"]),
            data_cfg["delimiter"],
        )

    def train_regression(self, directory: pathlib.Path) -> None:
        """
        Fit a model on whitened tabular data, by SGD or HMC, and report its test RMSE in whitened units.
        """
        cfg = self.config
        raw = subsample(self._load_regression(), cfg.data["subsample"], cfg.seed)
        train_raw, test_raw = split(raw, cfg.data["train_ratio"], cfg.seed, cfg.data["train_size"] or None)
        train, (test,), stats = whiten_fit_apply(train_raw, [test_raw])
        transforms = _parse_transforms(cfg.data["transforms"])
        encoder = DataEncoder("regression", train.columns, train.target_name, transforms, stats)

        grid = None
        groups = _parse_groups(cfg.data["grid"])
        if groups:
            grid = build_grid(apply_whitening(raw, stats), groups)
            train, test = (
                RegressionDataset(
                    locate_on_grid(part, grid.axes, grid.groups).astype(float),
                    part.targets,
                    tuple("+".join(group) for group in grid.groups),
                    part.target_name,
                    stats,
                )
                for part in (train, test)
            )
            encoder = dataclasses.replace(encoder, kind="grid", axes=grid.axes, groups=grid.groups)

        maps = build_feature_maps(cfg.maps, train, cfg.seed, grid)
        model = build_model(maps, cfg.model, cfg.seed)
        variant = "full-rank" if cfg.model["full_rank"] else "tgp"
        rank = model.ranks[0]
        chains = None
        if cfg.trainer == "sgd":
            model, trace = sgd_map(model, train, None, cfg.sgd_config())
            self.record(write_csv(directory / "metrics.csv", trace.to_frame()))
            test_mean = None
        else:
            hmc_cfg = cfg.hmc_config()
            self.seeds["hmc"] = hmc_cfg.seed
            chains = hmc(model, train, hmc_cfg)
            for index, trace in enumerate(chains.traces):
                self.record(write_csv(directory / f"metrics-chain{index + 1}.csv", trace.to_frame()))
            model = model.with_weights(chains.last())
            test_mean, _, _ = posterior_predict(chains, maps, test.inputs)

        if test_mean is None:
            test_mean = predict_batch(model, test.inputs)
        score = float(np.sqrt(np.mean((test_mean - test.targets) ** 2)))
        logger.info("%s: train RMSE %.6f, test RMSE %.6f", variant, regression_rmse(model, train), score)
        print(f"test RMSE {score:.6f}")

        manager = SaveStateManager(model, encoder, chains)
        self.record(manager.save_model(directory / "model.xml"))
        if chains is not None:
            self.record(manager.save_chains(directory / "chains.xml"))
        report = pd.DataFrame([{"split": "test", "model_variant": variant, "r": rank, "test_rmse": score}])
        self.record(write_csv(directory / "report.csv", report))
