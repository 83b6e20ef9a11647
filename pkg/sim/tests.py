import csv
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag
from scipy.integrate import trapezoid

from spectral import services as spectral
from spectral.models import GridFunction, uniform_nodes
from synthesis import catalog
from synthesis.models import GainSet

from .exceptions import MisalignedDelay
from .exporters import TRAJECTORY_COLUMNS, write_snapshots_csv, write_trajectory_csv
from .models import DelayBuffer, SimConfig, SimState
from .nonlinearities import SAT, SHIFTED_SIN, build_nonlinearity
from .services import (
    advance_input,
    control,
    decay_exponent,
    h1_norm,
    measurement,
    run_closed_loop,
    step_observer_nodelay,
    step_pde,
    step_subpredictors,
)


def published_delayed_config(**overrides):
    options = dict(
        N=catalog.SIM_N, M=catalog.SIM_M, r=catalog.SIM_DELAY, sigma=catalog.SIM_SIGMA,
        nonlinearity=SHIFTED_SIN, Nx=20, T_final=1.0,
        gains=GainSet(catalog.DELAYED_L0, catalog.DELAYED_K0, catalog.DELTA, delayed=True),
    )
    options.update(overrides)
    return SimConfig(**options)


class NormTests(SimpleTestCase):

    def test_h1_norm_examples(self):
        self.assertAlmostEqual(h1_norm(GridFunction.sample(np.ones_like, 50)), 1.0)
        phi1 = GridFunction.sample(lambda x: spectral.eigenfunction(1, x), 400)
        self.assertAlmostEqual(h1_norm(phi1), math.sqrt(1 + math.pi ** 2), delta=1e-3)
        parabola = GridFunction.sample(lambda x: 8.5 * x * (1 - x), 400)
        self.assertAlmostEqual(h1_norm(parabola), math.sqrt(72.25 / 30 + 72.25 / 3), delta=1e-4)

    def test_h1_norm_needs_three_nodes(self):
        with self.assertRaises(ValueError):
            h1_norm(GridFunction([0.0, 1.0], [1.0, 1.0]))

    def test_decay_exponent(self):
        times = np.linspace(0, 10, 101)
        self.assertAlmostEqual(decay_exponent(times, 4 * np.exp(-3 * times)), -3.0)
        with self.assertRaises(ValueError):
            decay_exponent([1.0], [1.0])


class DelayBufferTests(SimpleTestCase):

    def test_reads_zero_before_history_exists(self):
        buffer = DelayBuffer(0.3, 0.1)
        buffer.push(5.0)
        self.assertEqual(buffer.lag(0), 5.0)
        self.assertEqual(buffer.delayed(), 0.0)

    def test_delayed_value_is_exactly_delay_steps_old(self):
        buffer = DelayBuffer(0.3, 0.1, shape=(2,))
        for k in range(10):
            buffer.push([k, -k])
        np.testing.assert_array_equal(buffer.delayed(), [6, -6])
        self.assertEqual(len(buffer), 4)

    def test_cannot_read_beyond_delay(self):
        buffer = DelayBuffer(0.3, 0.1)
        with self.assertRaises(ValueError):
            buffer.lag(4)
        with self.assertRaises(ValueError):
            buffer.lag(-1)


class NonlinearityTests(SimpleTestCase):

    def test_catalog_vanishes_at_zero(self):
        x = uniform_nodes(30)
        for name in (SHIFTED_SIN, SAT):
            g = build_nonlinearity(name, 0.5)
            np.testing.assert_array_equal(g(1.7, x, np.zeros_like(x)), 0.0)

    def test_unknown_name(self):
        with self.assertRaises(ValueError):
            build_nonlinearity('cubic', 0.5)

    def test_projected_nonlinearity_respects_lipschitz_bound(self):
        rng = np.random.default_rng(11)
        for name in (SHIFTED_SIN, SAT):
            config = SimConfig(N=4, sigma=0.5, nonlinearity=name, Nx=60, T_final=0.1)
            for _ in range(20):
                field = config.modes @ rng.normal(size=5) + config.psi * rng.normal()
                g_hat = config.weighted_modes.T @ config.nonlinearity(rng.uniform(0, 5), config.nodes, field)
                bound = 0.5 * spectral.l2_norm(GridFunction(config.nodes, field))
                self.assertTrue(np.all(np.abs(g_hat) <= bound * (1 + 1e-9)))


class ConfigTests(SimpleTestCase):

    def test_step_divides_sub_delay(self):
        config = published_delayed_config()
        self.assertLessEqual(config.dt, 0.4 * config.dx ** 2 + 1e-15)
        self.assertAlmostEqual(config.sub_delay_steps * config.dt, catalog.SIM_DELAY / catalog.SIM_M)
        self.assertEqual(config.delay_steps, 2 * config.sub_delay_steps)

    def test_cfl_violation_is_rejected(self):
        with self.assertRaises(ValueError):
            SimConfig(Nx=20, dt=0.002, T_final=0.1)

    def test_misaligned_delay_is_rejected(self):
        with self.assertRaises(MisalignedDelay):
            published_delayed_config(dt=0.0007)

    def test_nonlinearity_must_vanish_at_zero(self):
        with self.assertRaises(ValueError):
            SimConfig(Nx=20, T_final=0.1, nonlinearity=lambda t, x, z: 0.5 * np.sin(t + 3 * x + z))

    def test_sensor_is_snapped_to_grid(self):
        with self.assertLogs('sim.models', 'WARNING'):
            config = SimConfig(Nx=20, T_final=0.1, x_star=0.013)
        self.assertEqual(config.x_star, 0.0)
        self.assertEqual(config.sensor_index, 0)


class PlantTests(SimpleTestCase):

    def test_pure_heat_equation_conserves_mean_and_dissipates(self):
        rng = np.random.default_rng(3)
        config = SimConfig(Nx=40, T_final=0.05, snapshot_stride=1, keep_snapshots=True,
                           initial_condition=lambda x: rng.normal(size=x.size))
        trajectory = run_closed_loop(config)
        means = [float(trapezoid(w, config.nodes)) for w in trajectory.snapshots_w]
        norms = [spectral.l2_norm(GridFunction(config.nodes, w)) for w in trajectory.snapshots_w]
        np.testing.assert_allclose(means, means[0], atol=1e-8)
        self.assertTrue(np.all(np.diff(norms) <= 1e-12))

    def test_constant_function_is_stationary(self):
        config = SimConfig(Nx=20, T_final=0.1, initial_condition=lambda x: np.ones_like(x),
                           snapshot_stride=1, keep_snapshots=True)
        trajectory = run_closed_loop(config)
        np.testing.assert_allclose(trajectory.snapshots_w[-1], 1.0, atol=1e-12)

    def test_first_mode_decays_at_its_eigenvalue(self):
        for Nx in (50, 100):
            with self.subTest(Nx=Nx):
                config = SimConfig(Nx=Nx, T_final=0.1, snapshot_stride=1, keep_snapshots=True,
                                   initial_condition=lambda x: spectral.eigenfunction(1, x))
                trajectory = run_closed_loop(config)
                amplitude = spectral.project(GridFunction(config.nodes, trajectory.snapshots_w[-1]), 1)
                expected = math.exp(-math.pi ** 2 * trajectory.times[-1])
                self.assertAlmostEqual(amplitude / expected, 1.0, delta=0.01)

    def test_constant_input_drifts_the_mean(self):
        config = SimConfig(Nx=50, T_final=0.1, initial_condition=lambda x: np.zeros_like(x))
        state = SimState.initial(config)
        steps = 200
        for _ in range(steps):
            state.w = GridFunction(config.nodes, step_pde(state, 1.0, config))
            state.t += config.dt
        mean = float(trapezoid(state.w.values, config.nodes))
        self.assertAlmostEqual(mean / (steps * config.dt), spectral.input_coefficient(0), delta=1e-3)

    def test_blow_up_returns_partial_trajectory(self):
        config = SimConfig(Nx=20, T_final=0.1, initial_condition=lambda x: 1e13 * np.cos(math.pi * x))
        trajectory = run_closed_loop(config)
        self.assertTrue(trajectory.blew_up)
        self.assertAlmostEqual(trajectory.abort_time, config.dt)
        self.assertEqual(trajectory.sample_count, 1)


class EstimatorTests(SimpleTestCase):

    def test_measurement_examples(self):
        config = SimConfig(Nx=20, T_final=0.1, initial_condition=lambda x: np.zeros_like(x))
        state = SimState.initial(config)
        self.assertEqual(measurement(state, config), 0.0)
        state.u_history.push(1.0)
        self.assertAlmostEqual(measurement(state, config), -2 / math.pi)

        config = SimConfig(Nx=20, T_final=0.1, x_star=1.0, initial_condition=lambda x: x)
        state = SimState.initial(config)
        state.u_history.push(3.0)
        self.assertAlmostEqual(measurement(state, config), 1.0)

    def test_observer_single_euler_step(self):
        gains = GainSet([2.75], [0.0, 0.0], catalog.DELTA)
        config = SimConfig(N=0, gains=gains, Nx=20, T_final=0.1)
        updated = step_observer_nodelay([1.0], 0.0, 0.0, 0.9, config)
        self.assertAlmostEqual(updated[0], 1 - config.dt * 2.75 * 0.1)

    def test_observer_without_innovation_decays_modewise(self):
        config = SimConfig(N=3, Nx=40, T_final=0.1)
        modes = np.array([0.5, 1.0, -1.0, 2.0])
        y = float(config.modes[config.sensor_index] @ modes)
        updated = step_observer_nodelay(modes, 0.0, 0.0, y, config)
        np.testing.assert_allclose(updated, modes * (1 - config.dt * config.lambdas), atol=1e-14)

    def test_control_examples(self):
        config = published_delayed_config()
        state = SimState.initial(config)
        self.assertEqual(control(state, config), 0.0)
        state.predictors[0].head = np.array([1.0, 1.0])
        self.assertAlmostEqual(control(state, config), -2.5)
        self.assertAlmostEqual(state.v_history.lag(0), -2.5)
        self.assertAlmostEqual(advance_input(0.0, 1.0, config), config.dt)

    def test_single_subpredictor_step(self):
        config = published_delayed_config(M=1, r=0.1, Nx=10, nonlinearity='zero', sigma=0.0)
        model = config.model
        state = SimState.initial(config)
        head = np.array([0.3, -0.2])
        tail = np.array([0.1, 0.0, -0.4, 0.25])
        state.predictors[0].head, state.predictors[0].tail = head, tail
        v = control(state, config)
        [(new_head, new_tail)] = step_subpredictors(state, 0.7, config)
        # los valores de hace r todavía son nulos
        A0t, B0t = model.controller_pair()
        expected_head = head + config.dt * (A0t @ head + B0t * v + np.asarray(catalog.DELAYED_L0) * 0.7)
        expected_tail = tail + config.dt * (model.A1 @ tail + model.B1 * v)
        np.testing.assert_allclose(new_head, expected_head, atol=1e-14)
        np.testing.assert_allclose(new_tail, expected_tail, atol=1e-14)


class ClosedLoopTests(SimpleTestCase):

    def test_zero_state_stays_zero(self):
        trajectory = run_closed_loop(published_delayed_config(initial_condition=lambda x: np.zeros_like(x)))
        for column in (trajectory.u_delayed, trajectory.y, trajectory.h1_w, trajectory.h1_what):
            self.assertFalse(np.any(column))

    def test_telescoping_identity_holds_at_every_sample(self):
        config = published_delayed_config(T_final=2.0, snapshot_stride=1)
        trajectory = run_closed_loop(config)
        self.assertFalse(trajectory.blew_up)
        self.assertLessEqual(np.max(trajectory.telescope_residual), 1e-12)

    def test_step_count_is_logged_before_the_run(self):
        config = published_delayed_config(T_final=0.1)
        with self.assertLogs('sim.services', 'INFO') as logs:
            run_closed_loop(config)
        self.assertIn('Inicio', logs.output[0])
        self.assertIn(f"{config.n_steps} pasos", logs.output[0])

    def test_sample_count(self):
        config = published_delayed_config(T_final=1.0, snapshot_stride=7)
        trajectory = run_closed_loop(config)
        self.assertEqual(trajectory.sample_count, math.floor(config.T_final / (7 * config.dt) + 1e-9) + 1)

    def test_input_is_zero_during_first_delay(self):
        config = published_delayed_config(T_final=0.5, snapshot_stride=1)
        trajectory = run_closed_loop(config)
        early = trajectory.times <= catalog.SIM_DELAY
        self.assertFalse(np.any(trajectory.u_delayed[early]))
        self.assertTrue(np.any(trajectory.u_delayed[~early]))

    def test_nodelay_pathway_ignores_M(self):
        config = SimConfig(N=4, M=5, sigma=0.5, nonlinearity=SHIFTED_SIN, Nx=20, T_final=0.2,
                           gains=GainSet(catalog.NODELAY_L0, catalog.NODELAY_K0, catalog.DELTA))
        self.assertEqual(config.delay_steps, 0)
        trajectory = run_closed_loop(config)
        self.assertFalse(trajectory.blew_up)
        self.assertFalse(np.any(trajectory.telescope_residual))

    def test_csv_export(self):
        config = published_delayed_config(T_final=0.2, keep_snapshots=True, snapshot_stride=50)
        trajectory = run_closed_loop(config)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_trajectory_csv(trajectory, Path(tmp) / 'trajectory.csv')
            with open(path, newline='') as f:
                rows = list(csv.reader(f))
            self.assertEqual(rows[0], TRAJECTORY_COLUMNS)
            self.assertEqual(len(rows) - 1, trajectory.sample_count)
            self.assertEqual(rows[1][0], '0')
            snapshots = write_snapshots_csv(trajectory, Path(tmp) / 'snapshots')
            self.assertEqual(len(snapshots), trajectory.sample_count)
            with open(snapshots[0], newline='') as f:
                self.assertEqual(next(csv.reader(f)), ['x', 'w', 'z'])


@tag('slow')
class PublishedSimulationTests(SimpleTestCase):

    def assertDecays(self, r):
        config = published_delayed_config(r=r, Nx=40, T_final=20.0)
        trajectory = run_closed_loop(config)
        self.assertFalse(trajectory.blew_up)
        self.assertLessEqual(trajectory.h1_w[-1], 0.05 * trajectory.h1_w[0])
        self.assertLessEqual(decay_exponent(trajectory.times, trajectory.h1_w), -2 * catalog.DELTA)

    def test_reference_delay_decays(self):
        self.assertDecays(catalog.SIM_DELAY)

    def test_larger_delay_still_decays(self):
        self.assertDecays(catalog.SIM_ROBUST_DELAY)

    def test_grid_refinement_converges(self):
        gains = GainSet(catalog.NODELAY_L0, catalog.NODELAY_K0, catalog.DELTA)
        finals = []
        for Nx in (20, 40, 80):
            config = SimConfig(N=4, sigma=0.5, nonlinearity=SHIFTED_SIN, Nx=Nx, T_final=2.0, gains=gains)
            finals.append(run_closed_loop(config).h1_w[-1])
        self.assertLess(abs(finals[2] - finals[1]), abs(finals[1] - finals[0]))
