import math

import numpy as np
from django.test import SimpleTestCase, tag

from spectral import services as spectral
from synthesis import catalog
from synthesis.models import GainSet
from synthesis.services import build_reduced_model, certify_gains

from . import textio
from .builders import build_lmi_delayed, build_lmi_nodelay
from .exceptions import DimensionMismatch
from .expressions import AffineMatrix, bmat
from .models import LmiProblem
from .search import (
    MAX_EXPANSIONS, _bisect, _Prober, gamma_grid, parse_gamma_grid, search_max_delay, search_max_sigma,
)
from .solver import solve_feasibility, verify_certificate


def lyapunov_problem(A):
    A = np.asarray(A, dtype=float)
    problem = LmiProblem('lyapunov')
    P = problem.add_symmetric('P', A.shape[0])
    problem.require_negative((P @ A).sym(), 'Lyapunov')
    return problem


def random_symmetric(rng, n):
    X = rng.normal(size=(n, n))
    return (X + X.T) / 2


def nodelay_gains():
    return GainSet(catalog.NODELAY_L0, catalog.NODELAY_K0, catalog.DELTA)


def delayed_gains():
    return GainSet(catalog.DELAYED_L0, catalog.DELAYED_K0, catalog.DELTA, delayed=True)


class ExpressionTests(SimpleTestCase):

    def test_affine_arithmetic_and_evaluation(self):
        problem = LmiProblem()
        P = problem.add_symmetric('P', 2, positive=False)
        A = np.array([[0.0, 1.0], [-2.0, -3.0]])
        expr = (P @ A).sym() + 3 * P - np.eye(2)
        value = np.array([[2.0, 0.5], [0.5, 1.0]])
        x = problem.pack({'P': value})
        np.testing.assert_allclose(expr.evaluate(x), value @ A + A.T @ value + 3 * value - np.eye(2))

    def test_bmat_infers_zero_blocks(self):
        problem = LmiProblem()
        a = problem.add_scalar('a', positive=False)
        block = bmat([[a.times(np.eye(2)), None], [None, np.ones((3, 3))]])
        self.assertEqual(block.shape, (5, 5))
        x = np.array([2.0])
        np.testing.assert_allclose(block.evaluate(x)[:2, :2], 2 * np.eye(2))
        np.testing.assert_allclose(block.evaluate(x)[:2, 2:], 0)

    def test_product_of_variables_is_rejected(self):
        problem = LmiProblem()
        P = problem.add_symmetric('P', 2)
        with self.assertRaises(DimensionMismatch):
            P @ P
        with self.assertRaises(DimensionMismatch):
            P.times(np.eye(2))

    def test_asymmetric_constraint_is_rejected(self):
        problem = LmiProblem()
        Y = problem.add_matrix('Y', 2, 2)
        with self.assertRaises(DimensionMismatch):
            problem.require_negative(Y, 'no simétrica')


class SolverTests(SimpleTestCase):

    def test_stable_diagonal_is_feasible(self):
        problem = lyapunov_problem(np.diag([-1.0, -2.0]))
        result = solve_feasibility(problem)
        self.assertTrue(result.feasible)
        report = verify_certificate(problem, result)
        self.assertTrue(report.satisfied)

    def test_unstable_diagonal_is_infeasible(self):
        result = solve_feasibility(lyapunov_problem(np.diag([1.0, -2.0])))
        self.assertFalse(result.feasible)
        self.assertGreater(result.lower_bound, -1e-6)

    def test_margin_maximization_returns_certificate(self):
        A = np.diag([-1.0, -2.0])
        problem = LmiProblem('acotado')
        P = problem.add_symmetric('P', 2)
        problem.require_negative((P @ A).sym(), 'Lyapunov')
        problem.require_negative(P - np.eye(2), 'P < I')
        result = solve_feasibility(problem, maximize_margin=True)
        self.assertTrue(result.feasible)
        self.assertTrue(verify_certificate(problem, result).satisfied)

    def test_two_scalar_problems_match_grid_oracle(self):
        rng = np.random.default_rng(2024)
        box = 1.0
        axis = np.linspace(-box, box, 200)
        ga, gb = np.meshgrid(axis, axis, indexing='ij')
        checked = 0
        while checked < 20:
            F0 = random_symmetric(rng, 3) + rng.uniform(-1.5, 1.5) * np.eye(3)
            F1, F2 = random_symmetric(rng, 3), random_symmetric(rng, 3)
            stack = F0 + ga[..., None, None] * F1 + gb[..., None, None] * F2
            best = float(np.min(np.linalg.eigvalsh(stack)[..., -1]))
            if abs(best) < 0.05:
                continue
            problem = LmiProblem('oráculo')
            a = problem.add_scalar('a', positive=False)
            b = problem.add_scalar('b', positive=False)
            problem.require_negative(AffineMatrix(F0) + a.times(F1) + b.times(F2), 'F(a, b) < 0')
            result = solve_feasibility(problem, trust_radius=box)
            with self.subTest(instance=checked, oracle=best):
                self.assertEqual(result.feasible, best < 0)
                if result.feasible:
                    self.assertTrue(verify_certificate(problem, result).satisfied)
            checked += 1


class VerificationTests(SimpleTestCase):

    def test_identity_certificate_margin(self):
        problem = lyapunov_problem(-np.eye(2))
        report = verify_certificate(problem, {'P': np.eye(2)})
        margins = report.as_dict()
        self.assertAlmostEqual(margins['Lyapunov'], -2.0)
        self.assertAlmostEqual(margins['P > 0'], 1.0)
        self.assertTrue(report.satisfied)

    def test_sign_flipped_certificate_is_flagged(self):
        problem = lyapunov_problem(-np.eye(2))
        report = verify_certificate(problem, {'P': -np.eye(2)})
        self.assertFalse(report.satisfied)
        self.assertIn('P > 0', [m.label for m in report.violations()])

    def test_missing_variable_is_rejected(self):
        problem = lyapunov_problem(-np.eye(2))
        with self.assertRaises(ValueError):
            verify_certificate(problem, {})


class BuilderAuditTests(SimpleTestCase):
    """Contrasta los constructores con matrices ensambladas a mano para N=1, N0=0, x*=0."""

    def setUp(self):
        self.rng = np.random.default_rng(11)
        self.mu = math.pi ** 2 / 4
        self.lam1 = math.pi ** 2
        self.b0 = 4 / math.pi ** 2
        self.b1 = spectral.input_coefficient(1)
        self.c1 = math.sqrt(2)
        self.psi0 = -2 / math.pi

    def spd(self, n):
        X = self.rng.normal(size=(n, n))
        return X @ X.T + n * np.eye(n)

    def test_nodelay_matrix(self):
        l = 2.75
        k1, k2 = -5.468, 32.19
        delta, sigma, gamma = 0.001, 0.4, 1.3
        model = build_reduced_model(0, 1, 0.0)
        problem = build_lmi_nodelay(model, nodelay_gains(), delta, sigma, gamma)

        F = np.array([
            [-self.mu - k1, -k2, 0.0, 0.0, 0.0],
            [-self.b0 * k1, -self.b0 * k2, l, 0.0, l * self.c1],
            [0.0, 0.0, -l, 0.0, -l * self.c1],
            [-self.b1 * k1, -self.b1 * k2, 0.0, -self.lam1, 0.0],
            [0.0, 0.0, 0.0, 0.0, -self.lam1],
        ])
        Lz = np.array([0.0, l, -l, 0.0, 0.0])
        KX = np.array([[k1, k2, 0.0, 0.0, 0.0]])
        XiX = np.diag([2 / math.pi ** 2, 1, 0, 1, 0])
        XiE = np.diag([0, 0, 1, 0, 1])
        P = self.spd(5)
        a1, a2, a3 = 0.7, 1.9, 0.3
        lam2 = 4 * math.pi ** 2
        xi = (1 + 1 / 15) ** 2
        kap = 1 + gamma + lam2 / gamma

        psi0 = (P @ F + F.T @ P + 2 * delta * P + 2 * a3 * xi / math.pi ** 2 * KX.T @ KX
                + 2 * a1 * sigma ** 2 * XiX + a2 * sigma ** 2 * XiE)
        rho_bar = 2 / kap * (-lam2 ** 2 + delta * lam2 + a2 * sigma ** 2 / 2)
        pi2 = -2 * kap / lam2 * np.diag([a1 / lam2, a2 / lam2, a3])
        z = np.zeros
        expected = np.block([
            [psi0, (P @ Lz)[:, None], P, P, z((5, 3))],
            [(P @ Lz)[None, :], [[2 * rho_bar]], z((1, 5)), z((1, 5)), np.ones((1, 3))],
            [P, z((5, 1)), -a1 * np.eye(5), z((5, 5)), z((5, 3))],
            [P, z((5, 1)), z((5, 5)), -a2 * np.eye(5), z((5, 3))],
            [z((3, 5)), np.ones((3, 1)), z((3, 5)), z((3, 5)), pi2],
        ])
        x = problem.pack({'P_X': P, 'alpha1': a1, 'alpha2': a2, 'alpha3': a3})
        main = next(c for c in problem.constraints if c.label == 'LMI principal')
        self.assertEqual(main.order, 5 + 1 + 10 + 3)
        np.testing.assert_allclose(main.expr.evaluate(x), expected, atol=1e-12, rtol=0)

    def test_delayed_matrices(self):
        l1, l2 = catalog.DELAYED_L0
        k1, k2 = catalog.DELAYED_K0
        delta, sigma, gamma, M, r = 0.001, 0.5, 2.0, 2, 0.3
        model = build_reduced_model(0, 1, 0.0, delayed=True)
        problem = build_lmi_delayed(model, delayed_gains(), delta, sigma, gamma, M=M, r=r)

        FX = np.array([
            [-self.mu - k1, -k2, 0.0],
            [-self.b0 * k1, -self.b0 * k2, 0.0],
            [-self.b1 * k1, -self.b1 * k2, -self.lam1],
        ])
        BX = np.array([[1.0], [self.b0], [self.b1]])
        F0 = np.array([
            [-self.mu - l1 * self.psi0, -l1, -l1 * self.c1],
            [-l2 * self.psi0, -l2, -l2 * self.c1],
            [0.0, 0.0, -self.lam1],
        ])
        LC = np.array([[l1], [l2], [0.0]]) @ np.array([[self.psi0, 1.0, self.c1]])
        z = np.zeros
        Fe = np.block([[F0, LC], [z((3, 3)), F0]])
        Lam = np.block([[LC, -LC], [z((3, 3)), LC]])
        Lz = np.array([l1, l2, 0.0, -l1, -l2, 0.0])[:, None]
        KI = np.array([[k1, k2, 0.0, k1, k2, 0.0]])
        Kt = np.array([[k1, k2, 0.0]])
        XiX = np.diag([2 / math.pi ** 2, 1, 1])
        XiE = np.diag([2 / math.pi ** 2, 1, 1, 2 / math.pi ** 2, 1, 1])

        PX, Pe, Se, Re = self.spd(3), self.spd(6), self.spd(6), self.spd(6)
        q, a1, a2, a3, beta = 0.2, 0.9, 1.1, 0.4, 1.7
        lam2 = 4 * math.pi ** 2
        xi = (1 + 1 / 15) ** 2
        eps = math.exp(-2 * delta * r / M)
        phi1 = (PX @ FX + FX.T @ PX + 2 * delta * PX + 2 * a1 * sigma ** 2 * XiX
                + 2 * a2 * xi / math.pi ** 2 * Kt.T @ Kt)
        phi2 = (Pe @ Fe + Fe.T @ Pe + 2 * delta * Pe + 2 * a3 * xi / math.pi ** 2 * KI.T @ KI
                + 2 * beta * sigma ** 2 * XiE + (1 - eps) * Se)
        C = PX @ BX @ KI
        PL = Pe @ Lz
        PLam = Pe @ Lam - eps * Se
        psi1 = np.block([
            [phi1, PX, C, z((3, 1)), z((3, 6)), z((3, 6))],
            [PX, -a1 * np.eye(3), z((3, 6)), z((3, 1)), z((3, 6)), z((3, 6))],
            [C.T, z((6, 3)), phi2, PL, PLam, Pe],
            [z((1, 3)), z((1, 3)), PL.T, [[-q * eps]], z((1, 6)), z((1, 6))],
            [z((6, 3)), z((6, 3)), PLam.T, z((6, 1)), -eps * (Se + Re), z((6, 6))],
            [z((6, 3)), z((6, 3)), Pe, z((6, 1)), z((6, 6)), -beta * np.eye(6)],
        ])
        theta = np.hstack([z((6, 6)), Fe, Lz, Lam, np.eye(6)])
        psi1 = psi1 + (r / M) ** 2 * theta.T @ Re @ theta
        phi3 = (-lam2 ** 2 + (delta + q * gamma / 2) * lam2 + sigma ** 2 * (a1 + beta)
                + q / 2 * (1 + gamma))
        scalar = np.array([
            [phi3, 1, 1, 1],
            [1, -2 / lam2 * a1 / lam2, 0, 0],
            [1, 0, -2 / lam2 * a2, 0],
            [1, 0, 0, -2 / lam2 * a3],
        ])

        x = problem.pack({'P_X': PX, 'P_e': Pe, 'S_e': Se, 'R_e': Re,
                          'q': q, 'alpha1': a1, 'alpha2': a2, 'alpha3': a3, 'beta': beta})
        by_label = {c.label: c for c in problem.constraints}
        np.testing.assert_allclose(by_label['LMI principal'].expr.evaluate(x), psi1, atol=1e-12, rtol=1e-12)
        np.testing.assert_allclose(by_label['LMI escalar'].expr.evaluate(x), scalar, atol=1e-12, rtol=1e-12)
        for name in ('P_X', 'P_e', 'S_e', 'R_e', 'q', 'alpha1', 'alpha2', 'alpha3', 'beta'):
            self.assertIn(f'{name} > 0', by_label)

    def test_builders_reject_bad_arguments(self):
        model = build_reduced_model(0, 4, 0.0, delayed=True)
        with self.assertRaises(ValueError):
            build_lmi_delayed(model, delayed_gains(), 0.001, 0.5, 1.0, M=2, r=0.0)
        with self.assertRaises(ValueError):
            build_lmi_delayed(model, delayed_gains(), 0.001, 0.5, 1.0, M=0, r=0.3)
        with self.assertRaises(DimensionMismatch):
            build_lmi_delayed(model, delayed_gains(), 0.001, 0.5, 1.0, N=5, M=2, r=0.3)
        with self.assertRaises(DimensionMismatch):
            build_lmi_nodelay(build_reduced_model(0, 4, 0.0), delayed_gains(), 0.001, 0.5, 1.0)


class SearchContractTests(SimpleTestCase):

    def threshold_builder(self, value, gamma):
        return lyapunov_problem(np.diag([value - 0.7, -1.0]))

    def test_gamma_grid(self):
        grid = parse_gamma_grid('0.1:100:16')
        self.assertEqual(len(grid), 16)
        self.assertAlmostEqual(grid[0], 0.1)
        self.assertAlmostEqual(grid[-1], 100.0)
        self.assertEqual(len(gamma_grid()), 16)
        with self.assertRaises(ValueError):
            parse_gamma_grid('0.1:100')

    def test_bracket_respects_tolerance(self):
        for tol in (0.5, 0.1, 0.01):
            with self.subTest(tol=tol):
                prober = _Prober(self.threshold_builder, [1.0], 'sigma')
                result = _bisect(prober, 0.0, 1.0, tol)
                lo, hi = result.bracket
                self.assertLessEqual(hi - lo, tol + 1e-12)
                self.assertLess(lo, 0.7)
                self.assertGreaterEqual(hi, 0.7)
                self.assertEqual(result.max_feasible, lo)

    def test_infeasible_floor_is_reported_in_band(self):
        prober = _Prober(lambda value, gamma: lyapunov_problem(np.diag([1.0, -1.0])), [1.0], 'sigma')
        result = _bisect(prober, 0.0, 1.0, 0.1)
        self.assertIsNone(result.max_feasible)
        self.assertFalse(result.unbounded)

    def test_always_feasible_is_marked_unbounded(self):
        prober = _Prober(lambda value, gamma: lyapunov_problem(np.diag([-1.0, -1.0])), [1.0], 'sigma')
        with self.assertLogs('lmi.search', 'WARNING') as logs:
            result = _bisect(prober, 0.0, 1.0, 0.1)
        self.assertTrue(result.unbounded)
        self.assertEqual(result.max_feasible, 2.0 ** (MAX_EXPANSIONS - 1))
        self.assertEqual(result.bracket, (result.max_feasible, math.inf))
        self.assertIn('cota inferior', logs.output[0])

    def test_bounded_search_is_not_marked(self):
        prober = _Prober(self.threshold_builder, [1.0], 'sigma')
        self.assertFalse(_bisect(prober, 0.0, 1.0, 0.1).unbounded)


class TextFormatTests(SimpleTestCase):

    def test_problem_and_certificate_survive_text_exchange(self):
        problem = lyapunov_problem(np.diag([-1.0, -2.0]))
        restored = textio.load_problem(textio.dump_problem(problem))
        self.assertEqual([c.label for c in restored.constraints], [c.label for c in problem.constraints])
        result = solve_feasibility(problem)
        certificate = textio.load_certificate(textio.dump_certificate(result), restored)
        self.assertTrue(verify_certificate(restored, certificate).satisfied)


@tag('slow')
class PublishedFeasibilityTests(SimpleTestCase):

    def test_nodelay_examples(self):
        model = build_reduced_model(0, 4, 0.0)
        gains = nodelay_gains()

        def any_gamma(sigma):
            for gamma in gamma_grid():
                problem = build_lmi_nodelay(model, gains, 0.001, sigma, gamma)
                result = solve_feasibility(problem)
                if result.feasible:
                    self.assertTrue(verify_certificate(problem, result).satisfied)
                    return True
            return False

        self.assertTrue(any_gamma(0.39))
        self.assertFalse(any_gamma(2.0))

    def test_linear_case_is_feasible(self):
        gains = nodelay_gains()
        for N in range(3, 9):
            model = build_reduced_model(0, N, 0.0)
            with self.subTest(N=N):
                self.assertTrue(any(
                    solve_feasibility(build_lmi_nodelay(model, gains, 0.001, 0.0, gamma)).feasible
                    for gamma in gamma_grid()
                ))

    def test_delayed_examples(self):
        model = build_reduced_model(0, 4, 0.0, delayed=True)
        gains = delayed_gains()

        def any_gamma(sigma, r):
            return any(
                solve_feasibility(build_lmi_delayed(model, gains, 0.001, sigma, gamma, M=2, r=r)).feasible
                for gamma in gamma_grid()
            )

        self.assertTrue(any_gamma(0.5, 0.32))
        self.assertFalse(any_gamma(0.5, 1.0))
        self.assertTrue(any_gamma(0.0, 0.01))

    def test_certificate_reverification_table2_cell(self):
        model = build_reduced_model(0, 5, 0.0, delayed=True)
        for gamma in gamma_grid():
            problem = build_lmi_delayed(model, delayed_gains(), 0.001, 0.5, gamma, M=2, r=0.45)
            result = solve_feasibility(problem)
            if result.feasible:
                report = verify_certificate(problem, result)
                self.assertTrue(report.satisfied)
                return
        self.fail("Ningún Γ certificó la celda N=5, r=0.45.")

    def test_published_gains_certify(self):
        certify_gains(build_reduced_model(0, 4, 0.0), catalog.NODELAY_L0, catalog.NODELAY_K0, 0.001)
        certify_gains(build_reduced_model(0, 4, 0.0, delayed=True), catalog.DELAYED_L0, catalog.DELAYED_K0, 0.001)


@tag('slow')
class TableReproductionTests(SimpleTestCase):

    def test_table1(self):
        for N, expected in catalog.TABLE1.items():
            with self.subTest(N=N):
                result = search_max_sigma(N, catalog.DELTA, nodelay_gains(), tol=0.01)
                self.assertAlmostEqual(result.max_feasible, expected, delta=0.05)
                self.assertLessEqual(result.width, 0.01)
                self.assertTrue(verify_certificate(
                    build_lmi_nodelay(build_reduced_model(0, N, 0.0), nodelay_gains(), catalog.DELTA,
                                      result.max_feasible, result.gamma_used),
                    result.certificate,
                ).satisfied)

    def test_table2(self):
        for N, expected in catalog.TABLE2.items():
            with self.subTest(N=N):
                result = search_max_delay(N, catalog.TABLE2_M, catalog.TABLE2_SIGMA, catalog.DELTA,
                                          delayed_gains(), tol=0.01)
                self.assertAlmostEqual(result.max_feasible, expected, delta=0.05)

    def test_more_subpredictors_do_not_shrink_delay(self):
        tol = 0.02
        two = search_max_delay(4, 2, 0.5, catalog.DELTA, delayed_gains(), tol=tol)
        three = search_max_delay(4, 3, 0.5, catalog.DELTA, delayed_gains(), tol=tol)
        self.assertGreaterEqual(three.max_feasible, two.max_feasible - tol)
