import csv
import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.apps import apps
from django.core.management import call_command
from django.core.management.base import CommandError
from django.db import connections
from django.test import SimpleTestCase, tag

from lmi.models import SearchResult
from lmi.search import MAX_EXPANSIONS
from sim.models import Trajectory
from synthesis import catalog

from .config import parse_config, parse_pairs
from .exceptions import ConfigConstraintViolation, ConfigError, MalformedConfigValue, UnknownConfigKey
from .models import RANDOM_PROFILE, REPRODUCE_TABLES, SIMULATE


def read_rows(path):
    with open(path, newline='', encoding='utf-8') as f:
        return list(csv.reader(f))


class ConfigParsingTests(SimpleTestCase):

    def test_empty_input_gives_reference_setup(self):
        config = parse_config()
        self.assertEqual(config.mode, REPRODUCE_TABLES)
        self.assertEqual(config.delta, 0.001)
        self.assertEqual(config.N0, 0)
        self.assertEqual(config.x_star, 0.0)
        self.assertEqual(config.sigma, 0.5)
        self.assertEqual(config.M, 2)
        self.assertTrue(config.delayed)

    def test_pairs_with_comments(self):
        values = parse_pairs(['# comentario', '', 'sigma = 0.3  # en línea', 'N=5'])
        self.assertEqual(values, {'sigma': '0.3', 'N': '5'})
        with self.assertRaises(MalformedConfigValue):
            parse_pairs(['sigma 0.3'])

    def test_flags_override_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'exp.cfg'
            path.write_text('sigma=0.3\nN=6\n', encoding='utf-8')
            config = parse_config(path, {'N': '7'})
        self.assertEqual(config.sigma, 0.3)
        self.assertEqual(config.N, 7)

    def test_mode_is_forced_by_command(self):
        self.assertEqual(parse_config(overrides={'mode': 'search-sigma'}, mode=SIMULATE).mode, SIMULATE)

    def test_distinct_errors(self):
        with self.assertRaises(UnknownConfigKey):
            parse_config(overrides={'sigmaa': '0.3'})
        with self.assertRaises(MalformedConfigValue):
            parse_config(overrides={'N': 'cuatro'})
        with self.assertRaises(MalformedConfigValue):
            parse_config(overrides={'gamma_grid': '1:2'})
        with self.assertRaises(ConfigConstraintViolation):
            parse_config(overrides={'sigma': '-1'})
        with self.assertRaises(ConfigConstraintViolation):
            parse_config(overrides={'N': '2', 'N0': '3', 'gains': 'designed'})
        for error in (UnknownConfigKey, MalformedConfigValue, ConfigConstraintViolation):
            self.assertTrue(issubclass(error, ConfigError))

    def test_model_assumptions_are_checked(self):
        # σ = 20 exige N0 ≥ 1
        with self.assertRaises(ConfigConstraintViolation):
            parse_config(overrides={'sigma': '20'})
        with self.assertRaises(ConfigConstraintViolation):
            parse_config(overrides={'x_star': '1', 'gains': 'designed'})
        with self.assertRaises(ConfigConstraintViolation):
            parse_config(overrides={'x_star': '0.5', 'N0': '0'})
        with self.assertRaises(ConfigConstraintViolation):
            parse_config(overrides={'delta': '0'})

    def test_random_profile_is_seeded(self):
        first = parse_config(overrides={'initial_condition': RANDOM_PROFILE, 'seed': '4'})
        second = parse_config(overrides={'initial_condition': RANDOM_PROFILE, 'seed': '4'})
        x = np.linspace(0, 1, 11)
        np.testing.assert_array_equal(first.initial_profile()(x), second.initial_profile()(x))


class ProjectSettingsTests(SimpleTestCase):

    def test_no_persistence_is_configured(self):
        self.assertEqual(connections['default'].settings_dict['ENGINE'], 'django.db.backends.dummy')
        self.assertFalse(apps.is_installed('django.contrib.auth'))
        self.assertFalse(apps.is_installed('django.contrib.contenttypes'))
        self.assertTrue(apps.is_installed('rest_framework'))


class CommandTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def call(self, name, *assignments, **options):
        call_command(name, out=str(self.out), assignments=list(assignments), stdout=StringIO(), **options)

    def test_synthesize_published_gains(self):
        self.call('synthesize', 'r=0')
        rows = read_rows(self.out / 'gains.csv')
        self.assertEqual(rows[0], ['name', 'index', 'value'])
        self.assertIn(['L0', '0', '2.75'], rows)
        self.assertIn(['K0', '1', '32.19'], rows)
        margin = next(float(row[2]) for row in rows if row[0] == 'controller_margin')
        self.assertLess(margin, 0)

    def test_synthesize_designed_delayed_gains(self):
        self.call('synthesize', 'gains=designed')
        rows = read_rows(self.out / 'gains.csv')
        self.assertEqual(sum(row[0] == 'L0' for row in rows), 2)

    def test_simulate_writes_trajectory_and_report(self):
        self.call('simulate', 'T_final=0.5', 'Nx=20')
        rows = read_rows(self.out / 'trajectory.csv')
        self.assertEqual(rows[0], ['t', 'u_delayed', 'y', 'h1_w', 'h1_what', 'telescope_residual'])
        report = read_rows(self.out / 'decay_fit.csv')
        self.assertEqual(report[0][0], 'decay_exponent')

    def test_simulate_is_deterministic(self):
        self.call('simulate', 'T_final=0.3', 'Nx=20')
        first = (self.out / 'trajectory.csv').read_bytes()
        self.call('simulate', 'T_final=0.3', 'Nx=20')
        self.assertEqual(first, (self.out / 'trajectory.csv').read_bytes())

    def test_simulate_without_delay(self):
        self.call('simulate', 'T_final=0.3', 'Nx=20', 'r=0', 'M=7')
        rows = read_rows(self.out / 'trajectory.csv')
        self.assertTrue(all(float(row[5]) == 0 for row in rows[1:]))

    def test_simulate_snapshots(self):
        self.call('simulate', 'T_final=0.1', 'Nx=20', 'snapshots=true', 'snapshot_stride=50')
        self.assertTrue((self.out / 'snapshots' / 'snapshot_00000.csv').exists())

    def test_blow_up_exit_code(self):
        broken = Trajectory(
            times=np.array([0.0]), u_delayed=np.zeros(1), y=np.zeros(1), h1_w=np.ones(1), h1_what=np.zeros(1),
            telescope_residual=np.zeros(1), nodes=np.linspace(0, 1, 21), blew_up=True, abort_time=0.25,
        )
        with mock.patch('experiments.services.run_closed_loop', return_value=broken):
            with self.assertRaises(CommandError) as ctx:
                self.call('simulate', 'T_final=0.5', 'Nx=20')
        self.assertEqual(ctx.exception.returncode, 3)
        self.assertIn('0.25', str(ctx.exception))
        self.assertTrue((self.out / 'trajectory.csv').exists())

    def test_unbounded_search_is_flagged_in_csv(self):
        lower = 2.0 ** (MAX_EXPANSIONS - 1)
        unbounded = SearchResult('sigma', lower, (lower, math.inf), gamma_used=1.0, unbounded=True)
        with mock.patch('experiments.services.search_max_sigma', return_value=unbounded):
            self.call('search_sigma', 'N=4')
        header, row = read_rows(self.out / 'search_sigma.csv')
        self.assertEqual(header[-1], 'unbounded')
        self.assertEqual(row[-1], 'true')
        self.assertEqual(float(row[1]), lower)
        self.assertEqual(row[3], 'inf')

    def test_usage_errors_exit_with_two(self):
        for assignments in (['bogus=1'], ['sigma=-1'], ['N=x'], ['sin_signo']):
            with self.subTest(assignments=assignments):
                with self.assertRaises(CommandError) as ctx:
                    self.call('simulate', *assignments)
                self.assertEqual(ctx.exception.returncode, 2)

    def test_verify_lmi_nodelay(self):
        self.call('verify_lmi', 'r=0', 'sigma=0.3')
        rows = read_rows(self.out / 'lmi_margins.csv')
        self.assertGreater(len(rows), 1)
        self.assertTrue(all(row[4] == 'true' for row in rows[1:]))
        self.assertTrue((self.out / 'certificate.txt').exists())


@tag('slow')
class ExperimentAcceptanceTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_verify_lmi_infeasible_exit_code(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('verify_lmi', out=str(self.out), assignments=['r=0', 'sigma=2'], stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)

    def test_search_sigma_bracket(self):
        call_command('search_sigma', out=str(self.out), tolerance='0.1', assignments=['N=4'],
                     stdout=StringIO())
        header, row = read_rows(self.out / 'search_sigma.csv')
        lower, upper = float(row[2]), float(row[3])
        self.assertLessEqual(upper - lower, 0.1)
        self.assertAlmostEqual(float(row[1]), catalog.TABLE1[4], delta=0.15)

    def test_reproduce_tables(self):
        call_command('reproduce_tables', out=str(self.out), tolerance='0.1', jobs='2', stdout=StringIO())
        table1 = {int(r[0]): float(r[1]) for r in read_rows(self.out / 'table1.csv')[1:]}
        table2 = {int(r[0]): (int(r[1]), float(r[2])) for r in read_rows(self.out / 'table2.csv')[1:]}
        self.assertEqual(sorted(table1), list(range(3, 9)))
        self.assertAlmostEqual(table1[8], 0.83, delta=0.1)
        self.assertEqual(table2[5][0], 2)
        self.assertAlmostEqual(table2[5][1], 0.45, delta=0.1)

    def test_reference_simulation_decays(self):
        call_command('simulate', out=str(self.out), assignments=['Nx=40'], stdout=StringIO())
        report = dict(zip(*read_rows(self.out / 'decay_fit.csv')))
        self.assertLess(float(report['decay_exponent']), -2 * catalog.DELTA)
        self.assertLessEqual(float(report['h1_final']), 0.05 * float(report['h1_initial']))
