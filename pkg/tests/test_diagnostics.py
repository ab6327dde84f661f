import unittest

import numpy as np

from src.errors import ContractViolationError
from src.inference.chain_set import ChainSet
from src.inference.diagnostics import effective_sample_size, gelman_rubin
from tests.random_data_library import random_tucker_weights
from tests.tools import minimal_setup_for_tests


def autoregressive_chains(phi, chains, draws, seed):
    rng = np.random.default_rng(seed)
    values = np.zeros((chains, draws))
    values[:, 0] = rng.normal(size=chains) / np.sqrt(1 - phi**2)
    for index in range(1, draws):
        values[:, index] = phi * values[:, index - 1] + rng.normal(size=chains)
    return values


class TestGelmanRubin(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_rhat_of_mixed_chains(self):
        draws = np.random.default_rng(0).normal(size=(4, 500, 3))
        summary = gelman_rubin(draws)
        self.assertEqual(["p0", "p1", "p2"], summary.names)
        self.assertTrue(np.all(summary.values < 1.05))
        self.assertFalse(summary.degenerate.any())

    def test_rhat_of_separated_chains(self):
        draws = np.random.default_rng(1).normal(size=(4, 200))
        draws[0] += 5.0
        self.assertGreater(gelman_rubin(draws).values[0], 1.5)

    def test_rhat_of_drifting_chain(self):
        # Split chains expose a trend within every chain
        draws = np.random.default_rng(2).normal(size=(4, 200)) + np.linspace(0.0, 10.0, 200)
        self.assertGreater(gelman_rubin(draws).values[0], 1.5)

    def test_rhat_degenerate_chains(self):
        identical = np.tile(np.random.default_rng(3).normal(size=50), (3, 1))
        summary = gelman_rubin(identical)
        self.assertEqual(1.0, summary.values[0])
        self.assertTrue(summary.degenerate[0])
        constant = np.ones((2, 20))
        constant[1] = 2.0
        self.assertTrue(gelman_rubin(constant).degenerate[0])

    def test_summary_statistics(self):
        draws = np.random.default_rng(4).normal(size=(2, 100, 4))
        summary = gelman_rubin(draws)
        self.assertAlmostEqual(np.mean(summary.values), summary.mean)
        self.assertAlmostEqual(np.std(summary.values), summary.std)

    def test_not_enough_draws(self):
        with self.assertRaises(ContractViolationError):
            gelman_rubin(np.zeros((1, 100)))
        with self.assertRaises(ContractViolationError):
            gelman_rubin(np.zeros((2, 9)))


class TestEffectiveSampleSize(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_ess_of_independent_draws(self):
        draws = np.random.default_rng(5).normal(size=(4, 1000))
        ess = effective_sample_size(draws).values[0]
        self.assertGreater(ess, 3000)
        self.assertLess(ess, 5000)

    def test_ess_of_autoregressive_draws(self):
        phi = 0.9
        draws = autoregressive_chains(phi, 4, 2000, seed=6)
        expected = draws.size * (1 - phi) / (1 + phi)
        ess = effective_sample_size(draws).values[0]
        self.assertGreater(ess, 0.6 * expected)
        self.assertLess(ess, 1.5 * expected)

    def test_ess_degenerate_parameter(self):
        draws = np.random.default_rng(7).normal(size=(2, 50, 2))
        draws[:, :, 1] = 3.0
        summary = effective_sample_size(draws)
        self.assertFalse(summary.degenerate[0])
        self.assertTrue(summary.degenerate[1])
        self.assertEqual(100.0, summary.values[1])

    def test_diagnostics_of_chain_set(self):
        chains = [[random_tucker_weights((2, 2), (1, 1), seed=seed + 100 * chain) for seed in range(20)] for chain in range(2)]
        chain_set = ChainSet(chains, [0.5, 0.5], [0, 1])
        rhat = gelman_rubin(chain_set)
        ess = effective_sample_size(chain_set)
        self.assertEqual(chain_set.parameter_names(), rhat.names)
        self.assertEqual(5, len(ess.values))
        with self.assertRaises(ContractViolationError):
            gelman_rubin(ChainSet(chains[:1], [0.5], [0]))
