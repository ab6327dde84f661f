import math
import os
import unittest

import numpy as np
from scipy import sparse

from src.cf.cf_model import (
    CfConfig,
    CfFit,
    bpmf_core,
    bpmf_reparam_check,
    build_cf_model,
    build_feature_maps,
    fit_cf,
    predict_rating,
    reset_unseen_rows,
    rmse,
)
from src.cf.experiments import (
    MODEL_VARIANTS,
    REPORT_COLUMNS,
    apply_cell,
    grid_cells,
    grid_search,
    model_grid,
    split_report,
    validation_split,
    variant_config,
    variant_grid,
)
from src.cf.ratings import RatingsData, SideInfo
from src.constants import CF_DEFAULT_RANK
from src.errors import ConfigError, ContractViolationError, NumericalError
from src.features.side_augmented import SideAugmentedFeatures
from src.inference.sgd import SgdConfig
from src.model.tgp_model import TgpModel, grad_log_joint, predict, predict_batch
from src.services.load_from_movielens_manager import load_movielens
from src.tensors.dense_tensor import DenseTensor
from src.tensors.tucker_weights import TuckerWeights
from tests.random_data_library import random_low_rank_ratings, random_ratings, random_side_info
from tests.tools import dataset_path, minimal_setup_for_tests

QUICK_SGD = SgdConfig(step_u=0.01, step_w=0.01, minibatch=20, epochs=5)


class TestRatings(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_from_triples(self):
        ratings = RatingsData.from_triples(3, 2, [(0, 1, 4.0), (2, 0, 2.0)])
        self.assertEqual(2, len(ratings))
        self.assertEqual([(0, 1, 4.0), (2, 0, 2.0)], ratings.triples())
        self.assertEqual(3.0, ratings.mean_rating)
        self.assertEqual(0, len(RatingsData.from_triples(3, 2, [])))

    def test_invalid_ratings(self):
        with self.assertRaises(ContractViolationError):
            RatingsData.from_triples(3, 2, [(3, 0, 1.0)])
        with self.assertRaises(ContractViolationError):
            RatingsData.from_triples(3, 2, [(0, -1, 1.0)])
        with self.assertRaises(ContractViolationError):
            RatingsData.from_triples(3, 2, [(0, 0, math.nan)])
        with self.assertRaises(ContractViolationError):
            RatingsData(3, 2, np.zeros(2), np.zeros(1), np.zeros(2))

    def test_to_dataset(self):
        ratings = RatingsData.from_triples(3, 2, [(0, 1, 4.0), (2, 0, 2.0)])
        data = ratings.to_dataset(3.0)
        np.testing.assert_array_equal([[0.0, 1.0], [2.0, 0.0]], data.inputs)
        np.testing.assert_array_equal([1.0, -1.0], data.targets)
        self.assertEqual(("user", "item"), data.columns)

    def test_side_info(self):
        side = random_side_info(seed=1)
        for i in range(8):
            np.testing.assert_array_equal(np.flatnonzero(side.user_vectors.toarray()[i]), np.sort(side.user_index_set(i)))
        with self.assertRaises(ContractViolationError):
            SideInfo(sparse.csr_matrix([[0.5, 0.0]]), sparse.csr_matrix([[1.0]]))


class TestCfModel(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_pmf_model_has_identity_core(self):
        model = build_cf_model(random_ratings(seed=2), None, CfConfig(rank=3), seed=3)
        np.testing.assert_array_equal(np.eye(3), model.weights.core.array)
        self.assertFalse(model.learn_w)
        self.assertEqual((8, 6), model.weights.dims)

    def test_predict_rating_matches_batch_prediction(self):
        ratings = random_ratings(seed=4)
        for cfg, side in (
            (CfConfig(rank=2, learn_w=True), None),
            (CfConfig(rank=2, learn_w=True, use_side=True, a=0.5, b=0.3, c=0.15), random_side_info(seed=5)),
        ):
            model = build_cf_model(ratings, side, cfg, seed=6)
            batch = predict_batch(model, ratings.to_dataset().inputs)
            for index, (i, j, _) in enumerate(ratings.triples()):
                self.assertAlmostEqual(batch[index], predict_rating(model, i, j), places=10)
                self.assertAlmostEqual(batch[index], predict_rating(model, i, j, side), places=10)

    def test_side_prediction_formula(self):
        ratings = random_ratings(seed=7)
        side = random_side_info(seed=8)
        a, b, c = 0.75, 0.3, 0.45
        model = build_cf_model(ratings, side, CfConfig(rank=2, learn_w=True, use_side=True, a=a, b=b, c=c), seed=9)
        users, items = model.weights.factors
        core = model.weights.core.array
        for i, j in ((0, 0), (3, 5), (7, 2)):
            left = users[i] + b * users[8 + side.user_index_set(i)].sum(axis=0)
            right = items[j] + c * items[6 + side.item_index_set(j)].sum(axis=0)
            self.assertAlmostEqual(a * left @ core @ right, predict_rating(model, i, j), places=10)

    def test_side_without_side_weights_is_plain_model(self):
        ratings = random_ratings(seed=10)
        side = random_side_info(seed=11)
        plain = build_cf_model(ratings, None, CfConfig(rank=2, learn_w=True), seed=12)
        maps = build_feature_maps(ratings, side, CfConfig(rank=2, use_side=True, a=1.0, b=0.0, c=0.0))
        rng = np.random.default_rng(13)
        factors = [
            np.vstack([factor, rng.normal(size=(feature_map.side_len, 2))])
            for factor, feature_map in zip(plain.weights.factors, maps)
        ]
        augmented = TgpModel(maps, TuckerWeights(DenseTensor.from_array(plain.weights.core.array), factors))
        inputs = ratings.to_dataset().inputs
        np.testing.assert_allclose(predict_batch(plain, inputs), predict_batch(augmented, inputs), atol=1e-12)

    def test_side_maps_scale(self):
        maps = build_feature_maps(random_ratings(seed=14), random_side_info(seed=15), CfConfig(use_side=True, a=0.25, b=0.3, c=0.45))
        self.assertIsInstance(maps[0], SideAugmentedFeatures)
        self.assertAlmostEqual(0.5, maps[0].a)
        self.assertAlmostEqual(0.15, maps[0].b)
        self.assertAlmostEqual(0.225, maps[1].b)
        self.assertEqual((1,), maps[1].columns)

    def test_side_needs_side_vectors(self):
        ratings = random_ratings(seed=16)
        with self.assertRaises(ContractViolationError):
            build_feature_maps(ratings, None, CfConfig(use_side=True))
        with self.assertRaises(ContractViolationError):
            build_feature_maps(ratings, random_side_info(n_users=9, seed=17), CfConfig(use_side=True))

    def test_invalid_cf_config(self):
        with self.assertRaises(ContractViolationError):
            CfConfig(rank=0)
        with self.assertRaises(ContractViolationError):
            CfConfig(b=-0.1)

    def test_predict_rating_out_of_range(self):
        model = build_cf_model(random_ratings(seed=18), None, CfConfig(rank=2), seed=19)
        with self.assertRaises(ContractViolationError):
            predict_rating(model, 8, 0)

    def test_predict_rating_matches_generic_prediction(self):
        ratings = random_ratings(seed=40)
        side = random_side_info(seed=41)
        rng = np.random.default_rng(42)
        pairs = np.column_stack([rng.integers(0, 8, size=100), rng.integers(0, 6, size=100)])
        cfg = CfConfig(rank=3, learn_w=True, use_side=True, a=0.8, b=0.2, c=0.35)
        model = build_cf_model(ratings, side, cfg, seed=43)
        for i, j in pairs:
            self.assertAlmostEqual(predict(model, [i, j]), predict_rating(model, int(i), int(j)), places=10)

    def test_predict_rating_with_side_override_out_of_range(self):
        side = random_side_info(seed=44)
        cfg = CfConfig(rank=2, learn_w=True, use_side=True, a=0.5, b=0.3, c=0.15)
        model = build_cf_model(random_ratings(seed=45), side, cfg, seed=46)
        for i, j in ((8, 0), (-1, 0), (0, 6)):
            with self.assertRaises(ContractViolationError):
                predict_rating(model, i, j, side)
        with self.assertRaises(ContractViolationError):
            predict_rating(model, 6, 0, random_side_info(n_users=5, seed=47))

    def test_identity_core_gradient_is_pmf_gradient(self):
        ratings = random_ratings(seed=48)
        data = ratings.to_dataset(ratings.mean_rating)
        model = build_cf_model(ratings, None, CfConfig(rank=3, noise_var=0.6), seed=49)
        users, items = model.weights.factors
        residuals = data.targets - np.sum(users[ratings.users] * items[ratings.items], axis=1)
        grad_users = -users / model.prior_u_var
        grad_items = -items / model.prior_u_var
        np.add.at(grad_users, ratings.users, residuals[:, np.newaxis] * items[ratings.items] / model.noise_var)
        np.add.at(grad_items, ratings.items, residuals[:, np.newaxis] * users[ratings.users] / model.noise_var)
        grads = grad_log_joint(model, data)
        np.testing.assert_allclose(grad_users, grads.grad_u[0], rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(grad_items, grads.grad_u[1], rtol=1e-10, atol=1e-12)

    def test_bpmf_reparametrisation(self):
        rng = np.random.default_rng(20)
        for r in (1, 3, 5):
            mu_u, mu_v, u_i, v_j = (rng.normal(size=r) for _ in range(4))
            l_u, l_v = np.tril(rng.normal(size=(r, r))), np.tril(rng.normal(size=(r, r)))
            lhs, rhs = bpmf_reparam_check(mu_u, mu_v, l_u, l_v, u_i, v_j)
            self.assertAlmostEqual(lhs, rhs, places=10)
            self.assertEqual((r + 1, r + 1), bpmf_core(mu_u, mu_v, l_u, l_v).shape)
        with self.assertRaises(ContractViolationError):
            bpmf_reparam_check(np.zeros(2), np.zeros(2), np.eye(3), np.eye(3), np.zeros(2), np.zeros(2))

    def test_rmse(self):
        test = RatingsData.from_triples(2, 2, [(0, 0, 3.0), (1, 1, 3.0)])
        self.assertEqual(1.0, rmse(lambda users, items: np.array([2.0, 4.0]), test))
        self.assertEqual(0.0, rmse(lambda users, items: np.array([3.0, 3.0]), test))
        clipped = RatingsData.from_triples(2, 2, [(0, 0, 1.0), (1, 1, 5.0)])
        self.assertEqual(0.0, rmse(lambda users, items: np.array([-2.0, 9.0]), clipped, clip=True))
        with self.assertRaises(ContractViolationError):
            rmse(lambda users, items: np.zeros(0), RatingsData.from_triples(2, 2, []))

    def test_reset_unseen_rows(self):
        ratings = random_ratings(seed=21)
        train = ratings.subset(np.flatnonzero(ratings.users != 0))
        model = build_cf_model(ratings, None, CfConfig(rank=2), seed=22)
        reset_unseen_rows(model, train)
        np.testing.assert_array_equal(np.zeros(2), model.weights.factors[0][0])
        self.assertTrue(np.any(model.weights.factors[0][1:] != 0))

    def test_fit_cf_beats_the_mean(self):
        train = random_low_rank_ratings(seed=23)
        sgd = SgdConfig(step_u=0.01, step_w=0.01, minibatch=20, epochs=100)
        mean_rmse = rmse(lambda users, items: np.full(users.size, train.mean_rating), train)
        for cfg in (CfConfig(rank=2), CfConfig(rank=2, learn_w=True)):
            fitted = fit_cf(train, None, cfg, sgd, seed=24)
            self.assertIsInstance(fitted, CfFit)
            self.assertAlmostEqual(train.mean_rating, fitted.rating_mean)
            self.assertLess(rmse(fitted, train), mean_rmse)

    def test_fit_cf_uncentred(self):
        train = random_ratings(seed=25)
        fitted = fit_cf(train, None, CfConfig(rank=2), QUICK_SGD, seed=26, center=False)
        self.assertEqual(0.0, fitted.rating_mean)
        np.testing.assert_allclose(predict_batch(fitted.model, train.to_dataset().inputs), fitted(train.users, train.items))


class TestExperiments(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_variants(self):
        self.assertEqual({"pmf", "tgp", "pmf-side", "tgp-side"}, set(MODEL_VARIANTS))
        cfg = variant_config("tgp-side", 7)
        self.assertTrue(cfg.learn_w and cfg.use_side)
        self.assertEqual(7, cfg.rank)
        with self.assertRaises(ConfigError):
            variant_config("bpmf")

    def test_grids(self):
        self.assertEqual(36, len(grid_cells(variant_grid("pmf"))))
        self.assertEqual(16, len(grid_cells(variant_grid("tgp"))))
        self.assertEqual(16 * 27, len(grid_cells(model_grid(True, True))))
        self.assertEqual([{"x": 1, "y": 3}, {"x": 1, "y": 4}, {"x": 2, "y": 3}, {"x": 2, "y": 4}], grid_cells({"x": (1, 2), "y": (3, 4)}))

    def test_apply_cell(self):
        cfg, sgd = apply_cell(CfConfig(), SgdConfig(), {"prior_u_std": 0.1, "noise_var": 0.75, "step_u": 1e-5, "a": 0.5})
        self.assertAlmostEqual(0.01, cfg.prior_u_var)
        self.assertEqual(0.75, cfg.noise_var)
        self.assertEqual(0.5, cfg.a)
        self.assertEqual(1e-5, sgd.step_u)
        with self.assertRaises(ConfigError):
            apply_cell(CfConfig(), SgdConfig(), {"momentum": 0.9})

    def test_validation_split(self):
        ratings = random_ratings(count=40, seed=27)
        fit, valid = validation_split(ratings, 0.1, seed=28)
        self.assertEqual(36, len(fit))
        self.assertEqual(4, len(valid))
        cells = {(i, j) for i, j, _ in fit.triples()} | {(i, j) for i, j, _ in valid.triples()}
        self.assertEqual(40, len(cells))
        with self.assertRaises(ContractViolationError):
            validation_split(random_ratings(count=3, seed=29), 0.1)

    def test_grid_search_skips_diverging_cells(self):
        train = random_low_rank_ratings(seed=30)
        grid = {"step_u": (100.0, 0.01), "noise_var": (1.0,)}
        with np.errstate(all="ignore"):
            result = grid_search(train, None, CfConfig(rank=2), QUICK_SGD, grid, seed=31)
        self.assertEqual({"step_u": 0.01, "noise_var": 1.0}, result.best)
        self.assertTrue(math.isinf(result.scores[0][1]))
        frame = result.to_frame()
        self.assertEqual(["step_u", "noise_var", "valid_rmse"], list(frame.columns))

    def test_grid_search_all_diverging(self):
        train = random_low_rank_ratings(seed=32)
        with np.errstate(all="ignore"), self.assertRaises(NumericalError):
            grid_search(train, None, CfConfig(rank=2), QUICK_SGD, {"step_u": (100.0,)}, seed=33)

    def test_split_report(self):
        splits = {
            "u1": (random_low_rank_ratings(seed=34), random_low_rank_ratings(count=40, seed=35)),
            "u2": (random_low_rank_ratings(seed=36), random_low_rank_ratings(count=40, seed=37)),
        }
        report = split_report(splits, None, ["pmf", "tgp"], QUICK_SGD, rank=2, tune=False)
        self.assertEqual(list(REPORT_COLUMNS), list(report.columns))
        self.assertEqual(8, len(report))
        self.assertEqual(["u1", "u2", "u1", "u2", "mean", "std", "mean", "std"], list(report["split"]))
        pmf = report[(report["model_variant"] == "pmf") & report["split"].isin(["u1", "u2"])]["test_rmse"]
        summary = report[report["model_variant"] == "pmf"].set_index("split")["test_rmse"]
        self.assertAlmostEqual(pmf.mean(), summary["mean"])
        self.assertAlmostEqual(np.std(pmf.to_numpy()), summary["std"])


@unittest.skipUnless(os.path.isdir(dataset_path("ml-100k")), "MovieLens-100k is not in the data directory")
class TestMovieLensBenchmark(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()
        movielens = load_movielens(dataset_path("ml-100k"))
        report = split_report(
            movielens.splits,
            movielens.side,
            ["pmf", "tgp", "tgp-side"],
            SgdConfig(minibatch=100, epochs=30),
            rank=CF_DEFAULT_RANK,
            seed=0,
            tune=True,
            shared=True,
            workers=os.cpu_count() or 1,
        )
        cls.per_split = report[~report["split"].isin(["mean", "std"])].pivot(
            index="split", columns="model_variant", values="test_rmse"
        )

    def test_pmf_error(self):
        self.assertAlmostEqual(0.9395, self.per_split["pmf"].mean(), delta=0.02)

    def test_learned_core_beats_identity_core(self):
        self.assertGreaterEqual(int((self.per_split["tgp"] < self.per_split["pmf"]).sum()), 4)

    def test_side_information_helps(self):
        self.assertGreaterEqual(int((self.per_split["tgp-side"] < self.per_split["tgp"]).sum()), 4)
        self.assertGreaterEqual(self.per_split["tgp"].mean() - self.per_split["tgp-side"].mean(), 0.015)
        self.assertLessEqual(self.per_split["tgp-side"].mean(), 0.915)
