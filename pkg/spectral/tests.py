import math

import numpy as np
from django.test import SimpleTestCase

from .models import GridFunction, ModalBasis, uniform_nodes
from . import services


class EigenstructureTests(SimpleTestCase):

    def test_eigenvalue_examples(self):
        self.assertEqual(services.eigenvalue(0), 0)
        self.assertAlmostEqual(services.eigenvalue(1), 9.8696044, places=6)
        self.assertAlmostEqual(services.eigenvalue(3), 88.8264396, places=6)

    def test_eigenfunction_examples(self):
        self.assertEqual(services.eigenfunction(0, 0.37), 1)
        self.assertAlmostEqual(services.eigenfunction(1, 0.0), math.sqrt(2))
        self.assertAlmostEqual(services.eigenfunction(2, 0.5), -math.sqrt(2))

    def test_eigenfunction_rejects_points_outside_interval(self):
        with self.assertRaises(ValueError):
            services.eigenfunction(1, 1.5)
        with self.assertRaises(ValueError):
            services.eigenfunction(1, -0.01)

    def test_actuation_shape_and_boundary_slopes(self):
        self.assertAlmostEqual(services.actuation_shape(0), -0.6366198, places=7)
        self.assertAlmostEqual(services.actuation_shape(1), 0.0)
        self.assertAlmostEqual(services.actuation_shape_derivative(0), 0.0)
        self.assertAlmostEqual(services.actuation_shape_derivative(1), 1.0)
        with self.assertRaises(ValueError):
            services.actuation_shape(2)

    def test_actuation_shape_norm(self):
        psi = GridFunction.sample(services.actuation_shape, 2000)
        self.assertAlmostEqual(services.l2_norm(psi) ** 2, 2 / math.pi ** 2, places=7)

    def test_input_coefficient_examples(self):
        self.assertAlmostEqual(services.input_coefficient(0), 0.4052847, places=7)
        self.assertAlmostEqual(services.input_coefficient(1), 0.1910584, places=7)
        self.assertAlmostEqual(services.input_coefficient(2), -0.0382117, places=7)

    def test_modal_basis_invariants(self):
        basis = ModalBasis.build(6)
        self.assertEqual(basis.eigenvalues[0], 0)
        self.assertTrue(np.all(np.diff(basis.eigenvalues) > 0))
        signs = np.sign(basis.input_coeffs[1:])
        np.testing.assert_array_equal(signs, [(-1) ** (n + 1) for n in range(1, 7)])
        self.assertAlmostEqual(basis.input_coeffs[0], 4 / math.pi ** 2)

    def test_kappa(self):
        self.assertEqual(services.kappa(0, 1), 2)
        self.assertAlmostEqual(services.kappa(1, 1), 2 + math.pi ** 2)
        self.assertAlmostEqual(services.kappa(5, 2), 3 + 25 * math.pi ** 2 / 2)
        with self.assertRaises(ValueError):
            services.kappa(1, 0)


class TailBoundTests(SimpleTestCase):

    def test_examples(self):
        self.assertAlmostEqual(services.tail_bound(4), 0.2550765, places=7)
        self.assertAlmostEqual(services.tail_bound(1), 1.1377778, places=7)
        with self.assertRaises(ValueError):
            services.tail_bound(0)

    def test_partial_sums_below_bound(self):
        for N in range(1, 11):
            with self.subTest(N=N):
                partial = services.tail_series(N)
                self.assertGreater(partial, 0)
                self.assertLessEqual(partial, 2 * services.tail_bound(N) / math.pi ** 2)

    def test_series_matches_coefficients(self):
        direct = sum(services.eigenvalue(n) * services.input_coefficient(n) ** 2 for n in range(5, 40))
        self.assertAlmostEqual(services.tail_series(4, upper=39), direct, places=12)


class QuadratureTests(SimpleTestCase):

    def test_orthonormality(self):
        nodes = uniform_nodes(4000)
        for m in range(13):
            fm = GridFunction(nodes, services.eigenfunction(m, nodes))
            coeffs = services.project_many(fm, 12)
            expected = np.zeros(13)
            expected[m] = 1.0
            np.testing.assert_allclose(coeffs, expected, atol=1e-8)

    def test_project_examples(self):
        phi2 = GridFunction.sample(lambda x: services.eigenfunction(2, x), 2000)
        self.assertAlmostEqual(services.project(phi2, 2), 1.0, delta=1e-8)
        self.assertAlmostEqual(services.project(phi2, 3), 0.0, delta=1e-8)

    def test_actuation_projections_are_minus_input_coefficients(self):
        psi = GridFunction.sample(services.actuation_shape, 2000)
        for n in range(13):
            with self.subTest(n=n):
                self.assertAlmostEqual(services.project(psi, n), -services.input_coefficient(n), delta=1e-6)

    def test_project_rejects_small_grids(self):
        with self.assertRaises(ValueError):
            services.project(GridFunction(np.array([0.0, 1.0]), np.array([1.0, 1.0])), 0)

    def test_synthesize_field(self):
        nodes = uniform_nodes(200)
        np.testing.assert_allclose(services.synthesize_field([1, 0, 0], nodes).values, 1.0)
        np.testing.assert_allclose(
            services.synthesize_field([0, 0, 1], nodes).values, services.eigenfunction(2, nodes))
        coeffs = np.array([0.3, -1.2, 0.5, 0.0, 2.0])
        field = services.synthesize_field(coeffs, uniform_nodes(2000))
        np.testing.assert_allclose(services.project_many(field, 4), coeffs, atol=1e-8)

    def test_grid_function_requires_uniform_nodes(self):
        with self.assertRaises(ValueError):
            GridFunction(np.array([0.0, 0.2, 1.0]), np.zeros(3))


class InequalityTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(7)
        self.nodes = uniform_nodes(4000)

    def test_h1_identity(self):
        for _ in range(10):
            coeffs = self.rng.normal(size=9)
            derivative = services.synthesize_derivative(coeffs, self.nodes)
            lam = services.eigenvalues(8)
            self.assertAlmostEqual(
                services.l2_norm(derivative) ** 2, float(np.sum(lam * coeffs ** 2)), delta=1e-6)

    def test_sobolev_inequality(self):
        lam = services.eigenvalues(8)
        for _ in range(100):
            coeffs = self.rng.normal(size=9) / (1 + np.arange(9))
            field = services.synthesize_field(coeffs, self.nodes)
            sup = float(np.max(field.values ** 2))
            for gamma in (0.5, 1.0, 2.0):
                bound = (1 + gamma) * np.sum(coeffs ** 2) + np.sum(lam * coeffs ** 2) / gamma
                self.assertLessEqual(sup, bound + 1e-12)
