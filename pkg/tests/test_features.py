import unittest

import numpy as np
from scipy import sparse

from src.errors import ContractViolationError, IllConditionedKernelError, SizeLimitError
from src.features.cholesky_grid import build_cholesky_features, jittered_cholesky
from src.features.hashed import HashedFeatures, hash_features, hash_tables, mix64
from src.features.identity import IdentityFeatures, identity_features
from src.features.nystrom import build_nystrom
from src.features.random_fourier import build_rff
from src.features.side_augmented import SideAugmentedFeatures, augment_side_info
from src.kernels.delta import Delta
from src.kernels.kernel import gram, kernel_eval
from src.kernels.periodic import Periodic
from src.kernels.squared_exponential import SquaredExponential
from src.services.load_from_xml_manager import load_feature_map
from src.tensors.contractions import kron
from tests.random_data_library import random_points
from tests.tools import NB_TESTS_FOR_PROPORTIONS, minimal_setup_for_tests


def dense(matrix):
    return matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix)


class TestIdentityFeatures(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_identity_features(self):
        np.testing.assert_array_equal([0.0, 0.0, 1.0, 0.0], identity_features(2, 4))
        with self.assertRaises(ContractViolationError):
            identity_features(4, 4)
        with self.assertRaises(ContractViolationError):
            identity_features(-1, 4)

    def test_identity_dot_products_are_delta_kernel(self):
        feature_map = IdentityFeatures(5, column=1)
        inputs = np.array([[9.0, 0.0], [9.0, 3.0], [9.0, 3.0]])
        matrix = dense(feature_map.feature_matrix(inputs))
        np.testing.assert_array_equal(gram(Delta(active_dims=(1,)), inputs), matrix @ matrix.T)

    def test_project_and_backproject_match_feature_matrix(self):
        rng = np.random.default_rng(0)
        feature_map = IdentityFeatures(6)
        inputs = np.array([[0.0], [5.0], [2.0], [5.0]])
        factor = rng.normal(size=(6, 3))
        coefficients = rng.normal(size=(4, 3))
        matrix = dense(feature_map.feature_matrix(inputs))
        np.testing.assert_allclose(matrix @ factor, feature_map.project(inputs, factor))
        np.testing.assert_allclose(matrix.T @ coefficients, feature_map.backproject(inputs, coefficients))

    def test_identity_out_of_range(self):
        feature_map = IdentityFeatures(3)
        with self.assertRaises(ContractViolationError):
            feature_map.features([3.0])
        with self.assertRaises(ContractViolationError):
            feature_map.features([1.5])


class TestHashedFeatures(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_mix64_is_deterministic(self):
        values = np.arange(10, dtype=np.uint64)
        np.testing.assert_array_equal(mix64(values), mix64(values))
        self.assertEqual(10, len(set(mix64(values).tolist())))

    def test_hash_tables(self):
        buckets, signs = hash_tables(100, 7, seed=3)
        self.assertTrue(np.all((buckets >= 0) & (buckets < 7)))
        self.assertTrue(set(np.unique(signs)) <= {-1.0, 1.0})
        other_buckets, other_signs = hash_tables(100, 7, seed=4)
        self.assertFalse(np.array_equal(buckets, other_buckets) and np.array_equal(signs, other_signs))
        with self.assertRaises(ContractViolationError):
            hash_tables(10, 0, seed=0)

    def test_hash_features_keeps_mass_of_unit_vectors(self):
        vector = identity_features(3, 20)
        hashed = hash_features(vector, 5, seed=1)
        self.assertEqual(5, hashed.size)
        self.assertEqual(1.0, np.abs(hashed).sum())

    def test_hashed_inner_products_are_unbiased(self):
        rng = np.random.default_rng(11)
        x, y = rng.normal(size=40), rng.normal(size=40)
        estimates = [
            hash_features(x, 10, seed) @ hash_features(y, 10, seed) for seed in range(NB_TESTS_FOR_PROPORTIONS)
        ]
        spread = np.std(estimates) / np.sqrt(len(estimates))
        self.assertLess(abs(np.mean(estimates) - x @ y), 5 * spread)

    def test_hashed_inner_product_variance_falls_as_one_over_m(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=200)
        y = x + rng.normal(size=200)
        seeds = range(10 * NB_TESTS_FOR_PROPORTIONS)
        variances = {}
        for m in (64, 128, 256):
            estimates = np.array([hash_features(x, m, seed) @ hash_features(y, m, seed) for seed in seeds])
            if m == 64:
                standard_error = np.std(estimates) / np.sqrt(len(estimates))
                self.assertLess(abs(estimates.mean() - x @ y), 3 * standard_error)
            variances[m] = np.var(estimates)
        constant = 64 * variances[64]
        for m in (128, 256):
            self.assertTrue(0.75 <= m * variances[m] / constant <= 1.25, (m, variances))

    def test_hashed_map_matches_dense_hashing(self):
        rng = np.random.default_rng(2)
        base = build_rff(SquaredExponential(), 30, seed=5, columns=(0,))
        feature_map = HashedFeatures(base, 8, seed=9)
        inputs = random_points(6, 1, seed=3)
        matrix = dense(feature_map.feature_matrix(inputs))
        for row, point in zip(matrix, inputs):
            np.testing.assert_allclose(hash_features(base.features(point), 8, 9), row, atol=1e-12)
        factor = rng.normal(size=(8, 2))
        coefficients = rng.normal(size=(6, 2))
        np.testing.assert_allclose(matrix @ factor, feature_map.project(inputs, factor), atol=1e-12)
        np.testing.assert_allclose(matrix.T @ coefficients, feature_map.backproject(inputs, coefficients), atol=1e-12)


class TestCholeskyFeatures(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_jittered_cholesky_of_singular_matrix(self):
        matrix = np.ones((4, 4))
        factor = jittered_cholesky(matrix)
        np.testing.assert_allclose(matrix, factor @ factor.T, atol=1e-6)
        self.assertTrue(np.allclose(factor, np.tril(factor)))

    def test_jittered_cholesky_gives_up(self):
        with self.assertRaises(IllConditionedKernelError):
            jittered_cholesky(np.diag([1.0, -1.0]))

    def test_grid_features_reproduce_product_kernel(self):
        axis_x = np.array([[0.0], [0.5], [1.0]])
        axis_t = np.array([[0.0], [1.0], [2.0], [3.0]])
        kernel_x = SquaredExponential(1.0, 0.7)
        kernel_t = Periodic(1.0, 1.0, 2.5)
        maps = build_cholesky_features([axis_x, axis_t], [kernel_x, kernel_t])
        self.assertEqual([3, 4], [feature_map.output_len for feature_map in maps])
        indices = [(i, j) for i in range(3) for j in range(4)]
        for first in indices:
            phi_first = kron([maps[0].features([first[0], first[1]]), maps[1].features([first[0], first[1]])])
            for second in indices:
                phi_second = kron(
                    [maps[0].features([second[0], second[1]]), maps[1].features([second[0], second[1]])]
                )
                expected = kernel_eval(kernel_x, axis_x[first[0]], axis_x[second[0]]) * kernel_eval(
                    kernel_t, axis_t[first[1]], axis_t[second[1]]
                )
                self.assertAlmostEqual(expected, phi_first @ phi_second, places=6)

    def test_grid_features_project_and_backproject(self):
        rng = np.random.default_rng(4)
        feature_map = build_cholesky_features([np.arange(5.0)], [SquaredExponential(1.0, 2.0)])[0]
        inputs = np.array([[4.0], [0.0], [4.0]])
        factor = rng.normal(size=(5, 2))
        coefficients = rng.normal(size=(3, 2))
        matrix = feature_map.feature_matrix(inputs)
        np.testing.assert_allclose(matrix @ factor, feature_map.project(inputs, factor))
        np.testing.assert_allclose(matrix.T @ coefficients, feature_map.backproject(inputs, coefficients))

    def test_grid_limits(self):
        with self.assertRaises(SizeLimitError):
            build_cholesky_features([np.arange(10.0)], [SquaredExponential()], limit=9)
        with self.assertRaises(ContractViolationError):
            build_cholesky_features([np.arange(3.0)], [])


class TestRandomFourierFeatures(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_rff_approximates_squared_exponential(self):
        kernel = SquaredExponential(2.0, [0.8, 1.5])
        feature_map = build_rff(kernel, 20000, seed=1)
        points = random_points(5, 2, seed=2)
        matrix = feature_map.feature_matrix(points)
        np.testing.assert_allclose(gram(kernel, points), matrix @ matrix.T, atol=0.1)

    def test_rff_is_unbiased_across_seeds(self):
        kernel = SquaredExponential(1.0, 1.0)
        for distance in (0.5, 1.0, 2.0):
            x, y = np.array([[0.3]]), np.array([[0.3 + distance]])
            estimates = []
            for seed in range(50):
                feature_map = build_rff(kernel, 1000, seed=seed, columns=(0,))
                estimates.append((feature_map.feature_matrix(x) @ feature_map.feature_matrix(y).T)[0, 0])
            with self.subTest(distance=distance):
                self.assertAlmostEqual(kernel_eval(kernel, 0.3, 0.3 + distance), np.mean(estimates), delta=0.02)

    def test_rff_is_seeded(self):
        first = build_rff(SquaredExponential(), 10, seed=3)
        second = build_rff(SquaredExponential(), 10, seed=3)
        np.testing.assert_array_equal(first.frequencies, second.frequencies)
        np.testing.assert_array_equal(first.phases, second.phases)

    def test_rff_needs_squared_exponential(self):
        with self.assertRaises(ContractViolationError):
            build_rff(Periodic(), 10, seed=0)
        with self.assertRaises(ContractViolationError):
            build_rff(SquaredExponential(), 0, seed=0)

    def test_rff_reads_its_columns(self):
        feature_map = build_rff(SquaredExponential(), 4, seed=0, columns=(2,))
        np.testing.assert_allclose(feature_map.features([0.0, 0.0, 1.0]), feature_map.features([5.0, 7.0, 1.0]))


class TestNystromFeatures(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_nystrom_exact_on_inducing_points(self):
        kernel = SquaredExponential(1.0, 1.0)
        inducing = random_points(6, 2, seed=5)
        feature_map = build_nystrom(kernel, inducing)
        matrix = feature_map.feature_matrix(inducing)
        np.testing.assert_allclose(gram(kernel, inducing), matrix @ matrix.T, atol=1e-6)

    def test_nystrom_never_exceeds_kernel_variance(self):
        kernel = SquaredExponential(1.0, 1.0)
        feature_map = build_nystrom(kernel, random_points(6, 2, seed=5))
        matrix = feature_map.feature_matrix(random_points(20, 2, seed=6))
        self.assertTrue(np.all(np.sum(matrix**2, axis=1) <= 1.0 + 1e-6))


class TestSideAugmentedFeatures(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_augment_side_info(self):
        vector = augment_side_info(1, 3, np.array([1.0, 0.0, 1.0]), 2.0, 0.5)
        np.testing.assert_array_equal([0.0, 2.0, 0.0, 0.5, 0.0, 0.5], vector)
        with self.assertRaises(ContractViolationError):
            augment_side_info(3, 3, np.zeros(2), 1.0, 1.0)
        with self.assertRaises(ContractViolationError):
            augment_side_info(0, 3, np.zeros(2), -1.0, 1.0)

    def test_side_dot_products(self):
        side = np.array([[1.0, 0.0, 1.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
        a, b = 0.7, 0.4
        feature_map = SideAugmentedFeatures(side, a, b)
        self.assertEqual(6, feature_map.output_len)
        for i in range(3):
            for j in range(3):
                expected = a**2 * (i == j) + b**2 * side[i] @ side[j]
                self.assertAlmostEqual(expected, feature_map.features([i]) @ feature_map.features([j]))
        np.testing.assert_array_equal([0, 2], np.sort(feature_map.index_set(0)))

    def test_side_project_and_backproject(self):
        rng = np.random.default_rng(6)
        side = (rng.uniform(size=(5, 4)) < 0.5).astype(float)
        feature_map = SideAugmentedFeatures(side, 1.3, 0.2, column=1)
        inputs = np.array([[0.0, 4.0], [0.0, 1.0], [0.0, 4.0]])
        factor = rng.normal(size=(9, 2))
        coefficients = rng.normal(size=(3, 2))
        matrix = dense(feature_map.feature_matrix(inputs))
        np.testing.assert_allclose(matrix @ factor, feature_map.project(inputs, factor))
        np.testing.assert_allclose(matrix.T @ coefficients, feature_map.backproject(inputs, coefficients))


class TestSaveAndLoadFeatureMaps(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        minimal_setup_for_tests()

    def test_save_and_load_feature_maps(self):
        points = random_points(4, 2, seed=7)
        inputs = np.column_stack([points, [0.0, 1.0, 2.0, 1.0]])
        maps = [
            IdentityFeatures(3, column=2),
            HashedFeatures(IdentityFeatures(3, column=2), 2, seed=4),
            build_rff(SquaredExponential(1.0, [0.5, 1.0]), 7, seed=2, columns=(0, 1)),
            build_nystrom(SquaredExponential(), points[:3], columns=(0, 1)),
            build_cholesky_features([np.arange(3.0)], [SquaredExponential()], columns=[2])[0],
            SideAugmentedFeatures(np.eye(3), 0.5, 0.25, column=2),
        ]
        for feature_map in maps:
            loaded = load_feature_map(feature_map.save("feature_map"))
            self.assertEqual(type(feature_map), type(loaded))
            self.assertEqual(feature_map.columns, loaded.columns)
            np.testing.assert_allclose(
                dense(feature_map.feature_matrix(inputs)), dense(loaded.feature_matrix(inputs)), rtol=1e-15
            )
