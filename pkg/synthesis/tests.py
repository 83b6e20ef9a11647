import math

import numpy as np
from django.test import SimpleTestCase

from lmi.exceptions import DimensionMismatch

from . import catalog
from .exceptions import AssumptionViolated, SynthesisFailed
from .models import GainSet
from .services import (
    assemble_delayed,
    assemble_nodelay,
    build_reduced_model,
    certify_gains,
    design_controller_gain,
    design_gains,
    design_observer_for_pair,
    design_observer_gain,
    is_controllable_diagonal,
    is_observable_diagonal,
    jordan_block,
    lyapunov_margin,
    minimal_controller_dimension,
)


class ReducedModelTests(SimpleTestCase):

    def test_minimal_controller_dimension(self):
        self.assertEqual(minimal_controller_dimension(0.5, 0.001), 0)
        self.assertEqual(minimal_controller_dimension(0, 0.001), 0)
        self.assertEqual(minimal_controller_dimension(10, 0.1), 1)

    def test_boundary_measurement_model(self):
        model = build_reduced_model(0, 4, 0.0)
        np.testing.assert_allclose(model.C0, [1.0])
        np.testing.assert_allclose(model.C1, [math.sqrt(2)] * 4)
        self.assertAlmostEqual(model.C0_tilde[0], -2 / math.pi)
        np.testing.assert_allclose(np.diag(model.A0_tilde), [-math.pi ** 2 / 4, 0.0])
        np.testing.assert_allclose(model.B0_tilde, [1.0, 4 / math.pi ** 2])
        np.testing.assert_allclose(np.diag(model.A1), [-(n * math.pi) ** 2 for n in range(1, 5)])

    def test_midpoint_zero_only_matters_inside_controller_modes(self):
        model = build_reduced_model(0, 1, 0.5)
        self.assertEqual(model.C0[0], 1.0)
        self.assertEqual(model.C1[0], 0.0)
        with self.assertRaises(AssumptionViolated):
            build_reduced_model(1, 1, 0.5)

    def test_delayed_mode_requires_nonzero_actuation_at_sensor(self):
        build_reduced_model(0, 3, 1.0)
        with self.assertRaises(AssumptionViolated):
            build_reduced_model(0, 3, 1.0, delayed=True)

    def test_hautus_helpers(self):
        model = build_reduced_model(0, 4, 0.0, delayed=True)
        self.assertTrue(is_observable_diagonal(*model.observer_pair()))
        self.assertTrue(is_controllable_diagonal(*model.controller_pair()))
        self.assertFalse(is_observable_diagonal(np.diag([-1.0, -1.0]), [1.0, 1.0]))
        self.assertFalse(is_controllable_diagonal(np.diag([-1.0, -2.0]), [1.0, 0.0]))


class PublishedGainTests(SimpleTestCase):

    def test_nodelay_gains_satisfy_lyapunov_inequalities(self):
        model = build_reduced_model(0, 4, 0.0)
        gains = certify_gains(model, catalog.NODELAY_L0, catalog.NODELAY_K0, catalog.DELTA)
        worst_o, min_o = lyapunov_margin(gains.P_o, gains.observer_closed_loop(model), catalog.DELTA)
        worst_c, min_c = lyapunov_margin(gains.P_c, gains.controller_closed_loop(model), catalog.DELTA)
        self.assertLess(worst_o, -1e-9)
        self.assertLess(worst_c, -1e-9)
        self.assertGreater(min(min_o, min_c), 1e-9)

    def test_delayed_gains_satisfy_lyapunov_inequalities(self):
        model = build_reduced_model(0, 4, 0.0, delayed=True)
        gains = certify_gains(model, catalog.DELAYED_L0, catalog.DELAYED_K0, catalog.DELTA)
        worst_o, _ = lyapunov_margin(gains.P_o, gains.observer_closed_loop(model), catalog.DELTA)
        self.assertLess(worst_o, -1e-9)

    def test_printed_delayed_observer_ordering_is_unstable(self):
        model = build_reduced_model(0, 4, 0.0, delayed=True)
        A = model.A0_tilde - np.outer(catalog.DELAYED_L0_AS_PRINTED, model.C0_tilde)
        self.assertGreater(np.trace(A), 0)
        with self.assertRaises(SynthesisFailed):
            certify_gains(model, catalog.DELAYED_L0_AS_PRINTED, catalog.DELAYED_K0, catalog.DELTA)

    def test_gain_sizes_are_checked(self):
        model = build_reduced_model(0, 4, 0.0)
        with self.assertRaises(DimensionMismatch):
            certify_gains(model, catalog.DELAYED_L0, catalog.NODELAY_K0, catalog.DELTA)


class DesignTests(SimpleTestCase):

    def test_scalar_observer(self):
        L, P = design_observer_for_pair([[-1.0]], [[1.0]], 0.5)
        self.assertGreater(L[0], -0.5)
        worst, smallest = lyapunov_margin(P, [[-1.0 - L[0]]], 0.5)
        self.assertLess(worst, 0)
        self.assertGreater(smallest, 0)

    def test_designed_gains_verify(self):
        for delayed in (False, True):
            with self.subTest(delayed=delayed):
                model = build_reduced_model(0, 4, 0.0, delayed=delayed)
                gains = design_gains(model, catalog.DELTA)
                self.assertEqual(gains.L0.size, 2 if delayed else 1)
                for P, A_cl in ((gains.P_o, gains.observer_closed_loop(model)),
                                (gains.P_c, gains.controller_closed_loop(model))):
                    worst, smallest = lyapunov_margin(P, A_cl, catalog.DELTA)
                    self.assertLess(worst, -1e-9)
                    self.assertGreater(smallest, 1e-9)

    def test_observer_design_uses_requested_pair(self):
        model = build_reduced_model(0, 2, 0.0, delayed=True)
        L, _ = design_observer_gain(model, catalog.DELTA, delayed=False)
        self.assertEqual(L.size, 1)
        K, _ = design_controller_gain(model, catalog.DELTA)
        self.assertEqual(K.size, 2)


class AssemblyTests(SimpleTestCase):

    def test_nodelay_blocks(self):
        model = build_reduced_model(0, 1, 0.0)
        gains = GainSet(catalog.NODELAY_L0, catalog.NODELAY_K0, catalog.DELTA)
        loop = assemble_nodelay(model, gains)
        self.assertEqual(loop.F_X.shape, (5, 5))
        np.testing.assert_allclose(loop.F_X[:2, :2], gains.controller_closed_loop(model))
        np.testing.assert_allclose(loop.L_zeta, [0.0, 2.75, -2.75, 0.0, 0.0])
        np.testing.assert_allclose(loop.K_X, [[-5.468, 32.19, 0, 0, 0]])

    def test_published_gains_give_decaying_loop(self):
        model = build_reduced_model(0, 4, 0.0)
        gains = GainSet(catalog.NODELAY_L0, catalog.NODELAY_K0, catalog.DELTA)
        eigenvalues = np.linalg.eigvals(assemble_nodelay(model, gains).F_X)
        self.assertLess(np.max(eigenvalues.real), -catalog.DELTA)

    def test_zero_gains_decouple(self):
        model = build_reduced_model(0, 3, 0.0)
        loop = assemble_nodelay(model, GainSet([0.0], [0.0, 0.0], catalog.DELTA))
        F = loop.F_X
        np.testing.assert_allclose(F, np.diag(np.diag(F)))
        expected = np.concatenate([np.diag(model.A0_tilde), np.diag(model.A0), np.diag(model.A1), np.diag(model.A1)])
        np.testing.assert_allclose(np.sort(np.diag(F)), np.sort(expected))

    def test_delayed_single_predictor(self):
        model = build_reduced_model(0, 4, 0.0, delayed=True)
        gains = GainSet(catalog.DELAYED_L0, catalog.DELAYED_K0, catalog.DELTA, delayed=True)
        loop = assemble_delayed(model, gains, 1)
        np.testing.assert_allclose(loop.F_e, loop.F0)
        np.testing.assert_allclose(loop.Lambda_e, loop.LC)
        np.testing.assert_allclose(loop.L_zeta, -np.concatenate([catalog.DELAYED_L0, np.zeros(4)]))

    def test_delayed_kronecker_structure(self):
        model = build_reduced_model(0, 4, 0.0, delayed=True)
        gains = GainSet(catalog.DELAYED_L0, catalog.DELAYED_K0, catalog.DELTA, delayed=True)
        loop = assemble_delayed(model, gains, 2)
        self.assertEqual(loop.F_e.shape, (12, 12))
        np.testing.assert_allclose(loop.F_e[:6, :6], loop.F0)
        np.testing.assert_allclose(loop.F_e[6:, 6:], loop.F0)
        np.testing.assert_allclose(loop.F_e[:6, 6:], loop.LC)
        np.testing.assert_allclose(loop.F_e[6:, :6], 0)
        np.testing.assert_allclose(loop.K0_tilde, [[1.95, 0.55, 0, 0, 0, 0]])
        self.assertEqual(loop.B_X.shape, (6,))

    def test_replicator_sums_controller_errors(self):
        model = build_reduced_model(0, 3, 0.0, delayed=True)
        gains = GainSet(catalog.DELAYED_L0, catalog.DELAYED_K0, catalog.DELTA, delayed=True)
        rng = np.random.default_rng(5)
        for M in (1, 2, 3):
            loop = assemble_delayed(model, gains, M)
            errors = rng.normal(size=(M, 5))
            np.testing.assert_allclose(loop.replicator @ errors.ravel(), errors[:, :2].sum(axis=0))

    def test_assembly_is_deterministic(self):
        model = build_reduced_model(0, 4, 0.0, delayed=True)
        gains = GainSet(catalog.DELAYED_L0, catalog.DELAYED_K0, catalog.DELTA, delayed=True)
        first, second = assemble_delayed(model, gains, 3), assemble_delayed(model, gains, 3)
        self.assertTrue(np.array_equal(first.F_e, second.F_e))
        self.assertTrue(np.array_equal(first.Lambda_e, second.Lambda_e))

    def test_jordan_block_is_nilpotent(self):
        for M in (1, 2, 3):
            self.assertFalse(np.any(np.linalg.matrix_power(jordan_block(M), M)))
        with self.assertRaises(ValueError):
            assemble_delayed(build_reduced_model(0, 2, 0.0, delayed=True),
                             GainSet(catalog.DELAYED_L0, catalog.DELAYED_K0, catalog.DELTA, delayed=True), 0)
