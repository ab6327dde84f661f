import itertools
import unittest

import numpy as np
from scipy import stats

from src.datasets import RegressionDataset
from src.errors import ContractViolationError, SizeLimitError
from src.features.identity import IdentityFeatures
from src.model.full_rank import full_rank_model, full_rank_posterior, kron_features
from src.model.tgp_model import (
    TgpModel,
    additive_components,
    additive_components_batch,
    default_prior_u_var,
    grad_log_joint,
    log_joint,
    predict,
    predict_batch,
    psi_matrices,
    sample_prior,
)
from src.tensors.contractions import full_contract
from src.tensors.dense_tensor import DenseTensor
from src.tensors.tucker_weights import TuckerWeights
from tests.random_data_library import random_regression_data, random_rff_model
from tests.tools import minimal_setup_for_tests, numerical_gradient


def with_core(model, core):
    return model.with_weights(TuckerWeights(DenseTensor.from_array(core), model.weights.factors))


def with_factor(model, mode, factor):
    factors = [matrix.copy() for matrix in model.weights.factors]
    factors[mode] = factor
    return model.with_weights(TuckerWeights(model.weights.core.copy(), factors))


class TestTgpModel(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_init_model(self):
        model = random_rff_model(n_features=5, rank=3, order=2, seed=1)
        self.assertEqual(2, model.order)
        self.assertEqual((3, 3), model.ranks)
        self.assertAlmostEqual(1.0 / 3.0, model.prior_u_var)
        self.assertTrue(model.learn_u)
        self.assertTrue(model.learn_w)

    def test_invalid_model(self):
        model = random_rff_model(n_features=5, seed=1)
        with self.assertRaises(ContractViolationError):
            TgpModel(model.maps[:1], model.weights)
        with self.assertRaises(ContractViolationError):
            TgpModel([IdentityFeatures(4), model.maps[1]], model.weights)
        with self.assertRaises(ContractViolationError):
            TgpModel(model.maps, model.weights, noise_var=0.0)
        with self.assertRaises(ContractViolationError):
            TgpModel(model.maps, model.weights, prior_w_var=-1.0)

    def test_default_prior_u_var(self):
        self.assertAlmostEqual(0.2, default_prior_u_var((5, 5)))
        self.assertAlmostEqual(0.25, default_prior_u_var((2, 8)))

    def test_predict_is_tucker_contraction(self):
        model = random_rff_model(n_features=6, rank=2, order=3, seed=2)
        data = random_regression_data(8, 3, seed=3)
        batch = predict_batch(model, data.inputs)
        for index, x in enumerate(data.inputs):
            psis = [
                factor.T @ feature_map.features(x) for feature_map, factor in zip(model.maps, model.weights.factors)
            ]
            expected = full_contract(model.weights.core, psis)
            self.assertAlmostEqual(expected, predict(model, x), places=10)
            self.assertAlmostEqual(expected, batch[index], places=10)

    def test_psi_matrices(self):
        model = random_rff_model(n_features=4, rank=2, seed=5)
        inputs = random_regression_data(3, 2, seed=6).inputs
        psis = psi_matrices(model, inputs)
        self.assertEqual([(3, 2), (3, 2)], [psi.shape for psi in psis])

    def test_log_joint(self):
        model = random_rff_model(n_features=4, rank=2, seed=7, noise_var=0.5, prior_u_var=0.3, prior_w_var=2.0)
        data = random_regression_data(10, 2, seed=8)
        residuals = data.targets - predict_batch(model, data.inputs)
        expected = (
            -np.sum(residuals**2) / (2 * 0.5)
            - sum(np.sum(factor**2) for factor in model.weights.factors) / (2 * 0.3)
            - np.sum(model.weights.core.data**2) / (2 * 2.0)
        )
        self.assertAlmostEqual(expected, log_joint(model, data), places=8)

    def test_log_joint_of_empty_data_is_the_prior(self):
        model = random_rff_model(n_features=4, rank=2, seed=7)
        empty = RegressionDataset(np.zeros((0, 2)), np.zeros(0))
        expected = -np.sum(model.weights.core.data**2) / 2 - sum(
            np.sum(factor**2) for factor in model.weights.factors
        ) / (2 * model.prior_u_var)
        self.assertAlmostEqual(expected, log_joint(model, empty))

    def gradient_cases(self):
        for order, rank, n_features, instance in itertools.product((2, 3), (2, 5), (3, 7), range(3)):
            seed = 100 * order + 10 * rank + n_features + 1000 * instance
            model = random_rff_model(n_features=n_features, rank=rank, order=order, seed=seed, noise_var=0.7)
            yield (order, rank, n_features, instance), model, random_regression_data(12, order, seed=seed + 1)

    def test_gradient_of_core_matches_finite_differences(self):
        for case, model, data in self.gradient_cases():
            with self.subTest(case=case):
                grads = grad_log_joint(model, data)
                numerical = numerical_gradient(
                    lambda core: log_joint(with_core(model, core), data), model.weights.core.array
                )
                np.testing.assert_allclose(numerical, grads.grad_w, rtol=1e-5, atol=1e-5)

    def test_gradient_of_factors_matches_finite_differences(self):
        for case, model, data in self.gradient_cases():
            grads = grad_log_joint(model, data)
            for mode in range(model.order):
                with self.subTest(case=case, mode=mode):
                    numerical = numerical_gradient(
                        lambda factor: log_joint(with_factor(model, mode, factor), data), model.weights.factors[mode]
                    )
                    np.testing.assert_allclose(numerical, grads.grad_u[mode], rtol=1e-5, atol=1e-5)

    def test_gradient_scale_weights_the_likelihood(self):
        model = random_rff_model(n_features=4, rank=2, seed=13)
        data = random_regression_data(6, 2, seed=14)
        prior = grad_log_joint(model, data, 0.0).flatten()
        single = grad_log_joint(model, data, 1.0).flatten()
        tripled = grad_log_joint(model, data, 3.0).flatten()
        np.testing.assert_allclose(prior + 3.0 * (single - prior), tripled, rtol=1e-10, atol=1e-10)

    def test_gradient_of_empty_batch(self):
        model = random_rff_model(n_features=4, rank=2, seed=13)
        empty = RegressionDataset(np.zeros((0, 2)), np.zeros(0))
        grads = grad_log_joint(model, empty, 0.0)
        np.testing.assert_allclose(-model.weights.core.array / model.prior_w_var, grads.grad_w)
        with self.assertRaises(ContractViolationError):
            grad_log_joint(model, empty, 1.0)

    def test_additive_components_sum_to_prediction(self):
        model = random_rff_model(n_features=5, rank=3, order=2, seed=15)
        data = random_regression_data(7, 2, seed=16)
        components = additive_components_batch(model, data.inputs)
        self.assertEqual((7, 3, 3), components.shape)
        np.testing.assert_allclose(predict_batch(model, data.inputs), components.sum(axis=(1, 2)), atol=1e-12)
        single = additive_components(model, data.inputs[2])
        np.testing.assert_allclose(components[2], single.array)
        with self.assertRaises(SizeLimitError):
            additive_components_batch(model, data.inputs, limit=8)


class TestSamplePrior(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_sample_prior_shapes(self):
        weights = sample_prior([4, 6], (2, 3), 2, seed=1)
        self.assertEqual((2, 3), weights.ranks)
        self.assertEqual((4, 6), weights.dims)

    def test_sample_prior_variances(self):
        weights = sample_prior([4000, 1], 2, 2, prior_u_var=0.25, prior_w_var=1.0, seed=2)
        self.assertAlmostEqual(0.25, np.var(weights.factors[0]), delta=0.025)

    def test_reconstructed_entries_tend_to_standard_normal(self):
        # Diagonal entries U1[i]^T W U2[i] of one wide draw are iid given the core
        rank, draws = 2000, 5000
        weights = sample_prior([draws, draws], rank, 2, prior_u_var=1.0 / rank, prior_w_var=1.0, seed=5)
        first, second = weights.factors
        entries = np.einsum("ia,ia->i", first @ weights.core.array, second)
        self.assertTrue(0.9 <= np.var(entries) <= 1.1, np.var(entries))
        self.assertGreater(stats.kstest(entries, "norm").pvalue, 0.01)

    def test_zero_core_variance(self):
        weights = sample_prior([3, 3], 2, 2, prior_w_var=0.0, seed=3)
        np.testing.assert_array_equal(np.zeros(4), weights.core.data)

    def test_extending_factor_keeps_shared_rows(self):
        small = sample_prior([5, 4], 2, 2, seed=4)
        large = sample_prior([7, 4], 2, 2, seed=4)
        np.testing.assert_array_equal(small.factors[0], large.factors[0][:5])
        np.testing.assert_array_equal(small.factors[1], large.factors[1])
        np.testing.assert_array_equal(small.core.data, large.core.data)

    def test_invalid_prior(self):
        with self.assertRaises(ContractViolationError):
            sample_prior([3], 2, 2)
        with self.assertRaises(ContractViolationError):
            sample_prior([3, 0], 2, 2)
        with self.assertRaises(ContractViolationError):
            sample_prior([3, 3], 2, 2, prior_u_var=-1.0)


class TestFullRank(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_full_rank_model_predicts_kronecker_regression(self):
        model = random_rff_model(n_features=3, rank=1, seed=17)
        full = full_rank_model(model.maps, noise_var=0.1, seed=2)
        self.assertFalse(full.learn_u)
        self.assertEqual((3, 3), full.ranks)
        inputs = random_regression_data(5, 2, seed=18).inputs
        expected = kron_features(full.maps, inputs) @ full.weights.core.data
        np.testing.assert_allclose(expected, predict_batch(full, inputs), atol=1e-12)

    def test_posterior_mean_solves_regularised_least_squares(self):
        model = random_rff_model(n_features=3, rank=1, seed=19)
        data = random_regression_data(30, 2, seed=20)
        noise_var, prior_w_var = 0.2, 1.5
        posterior = full_rank_posterior(model.maps, data, noise_var, prior_w_var)
        phi = kron_features(model.maps, data.inputs)
        expected = np.linalg.solve(phi.T @ phi + noise_var / prior_w_var * np.eye(9), phi.T @ data.targets)
        np.testing.assert_allclose(expected, posterior.mean, rtol=1e-8, atol=1e-10)
        mean, variance = posterior.predict(data.inputs)
        np.testing.assert_allclose(phi @ expected, mean, rtol=1e-8, atol=1e-10)
        self.assertTrue(np.all(variance > 0))

    def test_posterior_limit(self):
        model = random_rff_model(n_features=5, rank=1, seed=21)
        data = random_regression_data(5, 2, seed=22)
        with self.assertRaises(SizeLimitError):
            full_rank_posterior(model.maps, data, 1.0, limit=24)
