import math
import unittest

import numpy as np

from src.errors import ContractViolationError, DivergenceError
from src.inference.metric_trace import TRACE_COLUMNS, MetricTrace
from src.inference.sgd import SgdConfig, ascend, hold_core_at_identity, regression_rmse, sgd_map
from src.model.tgp_model import TgpModel, grad_log_joint, log_joint, sample_prior
from tests.random_data_library import random_identity_model, random_low_rank_ratings, random_rff_model
from tests.tools import minimal_setup_for_tests


def full_matrix_data(seed):
    ratings = random_low_rank_ratings(n_users=6, n_items=5, rank=2, count=30, seed=seed)
    return ratings.to_dataset(ratings.mean_rating)


class TestSgdConfig(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_invalid_config(self):
        with self.assertRaises(ContractViolationError):
            SgdConfig(step_u=-1.0)
        with self.assertRaises(ContractViolationError):
            SgdConfig(minibatch=0)
        with self.assertRaises(ContractViolationError):
            SgdConfig(eval_every=0)

    def test_steps_decay(self):
        cfg = SgdConfig(step_u=1.0, step_w=2.0, decay=0.5)
        self.assertEqual((1.0, 2.0), cfg.steps_at(0))
        self.assertEqual((0.5, 1.0), cfg.steps_at(2))


class TestSgdMap(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_sgd_increases_log_joint(self):
        data = full_matrix_data(1)
        model = random_identity_model(6, 5, rank=2, seed=2)
        cfg = SgdConfig(step_u=0.01, step_w=0.01, minibatch=len(data), epochs=200, eval_every=50)
        fitted, trace = sgd_map(model, data, None, cfg)
        self.assertGreater(log_joint(fitted, data), log_joint(model, data))
        self.assertLess(regression_rmse(fitted, data), regression_rmse(model, data))
        log_joints = trace.column("log_joint")
        self.assertTrue(np.all(np.diff(log_joints) > 0))

    def test_sgd_leaves_initial_model_untouched(self):
        data = full_matrix_data(3)
        model = random_identity_model(6, 5, rank=2, seed=4)
        before = model.weights.flatten().copy()
        sgd_map(model, data, None, SgdConfig(step_u=0.01, step_w=0.01, minibatch=10, epochs=2))
        np.testing.assert_array_equal(before, model.weights.flatten())

    def test_trace_rows(self):
        data = full_matrix_data(5)
        model = random_identity_model(6, 5, rank=2, seed=6)
        _, trace = sgd_map(model, data, data, SgdConfig(minibatch=7, epochs=5, eval_every=2))
        # Epoch 0, every second epoch and the last one
        np.testing.assert_array_equal([0, 2, 4, 5], trace.column("epoch_or_iter"))
        self.assertFalse(np.isnan(trace.column("valid_rmse")).any())
        self.assertTrue(np.isnan(trace.column("accept_rate")).all())

    def test_zero_steps_keep_parameters(self):
        data = full_matrix_data(7)
        model = random_identity_model(6, 5, rank=2, seed=8)
        fitted, trace = sgd_map(model, data, None, SgdConfig(step_u=0.0, step_w=0.0, minibatch=4, epochs=3))
        np.testing.assert_array_equal(model.weights.flatten(), fitted.weights.flatten())
        self.assertEqual(4, len(trace))

    def test_sgd_is_deterministic(self):
        data = full_matrix_data(9)
        model = random_identity_model(6, 5, rank=2, seed=10)
        cfg = SgdConfig(step_u=0.01, step_w=0.01, minibatch=4, epochs=3, seed=11)
        first, _ = sgd_map(model, data, None, cfg)
        second, _ = sgd_map(model, data, None, cfg)
        np.testing.assert_array_equal(first.weights.flatten(), second.weights.flatten())

    def test_fixed_identity_core(self):
        data = full_matrix_data(12)
        model = random_identity_model(6, 5, rank=3, seed=13)
        fitted, _ = sgd_map(model, data, None, SgdConfig(step_u=0.01, minibatch=5, epochs=3, learn_w=False))
        np.testing.assert_array_equal(np.eye(3), fitted.weights.core.array)
        self.assertFalse(fitted.learn_w)

    def test_identity_core_needs_equal_ranks(self):
        model = random_rff_model(n_features=4, rank=2, seed=14)
        hold_core_at_identity(model)
        np.testing.assert_array_equal(np.eye(2), model.weights.core.array)
        unequal = TgpModel(model.maps, sample_prior([4, 4], (2, 3), 2, seed=1))
        with self.assertRaises(ContractViolationError):
            hold_core_at_identity(unequal)

    def test_minibatch_larger_than_data(self):
        data = full_matrix_data(15)
        model = random_identity_model(6, 5, rank=2, seed=16)
        with self.assertRaises(ContractViolationError):
            sgd_map(model, data, None, SgdConfig(minibatch=31))

    def test_full_batch_sgd_is_gradient_ascent(self):
        data = full_matrix_data(19)
        model = random_identity_model(6, 5, rank=2, seed=20)
        fitted, _ = sgd_map(model, data, None, SgdConfig(step_u=0.01, step_w=0.02, minibatch=len(data), epochs=5, seed=21))
        expected = model.copy()
        for _ in range(5):
            ascend(expected, grad_log_joint(expected, data), 0.01, 0.02)
        np.testing.assert_array_equal(expected.weights.flatten(), fitted.weights.flatten())

    def test_divergence(self):
        data = full_matrix_data(17)
        model = random_identity_model(6, 5, rank=2, seed=18)
        with np.errstate(all="ignore"):
            with self.assertRaises(DivergenceError):
                sgd_map(model, data, None, SgdConfig(step_u=50.0, step_w=50.0, minibatch=30, epochs=20))


class TestMetricTrace(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_metric_trace(self):
        trace = MetricTrace()
        trace.record(0, 1.0)
        trace.record(1, 0.5, 0.6, -3.0, 0.9)
        frame = trace.to_frame()
        self.assertEqual(list(TRACE_COLUMNS), list(frame.columns))
        self.assertEqual(2, len(trace))
        self.assertTrue(math.isnan(frame["valid_rmse"][0]))
        self.assertEqual(0.9, trace.column("accept_rate")[1])
