# Copyright 2024 Grid Control Lab
#
# Licensed under the Apache License, Version 2.0 (the "License"); you may
# not use this file except in compliance with the License. You may obtain
# a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
# WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
# License for the specific language governing permissions and limitations
# under the License.

import json
import os

import fixtures
import futurist
import numpy as np

from voltvar.common import constants
from voltvar.control import simulator
from voltvar.tests.unit import base
from voltvar.tests.unit import fakes
from voltvar.utils import driver_utils
from voltvar.utils import exceptions
from voltvar.worker import experiment


FEEDER = {
    'name': 'path-4',
    'base': {'kv': 4.8, 'mva': 1.0},
    'buses': [{'id': 0}, {'id': 1, 'load_p': 0.05, 'load_q': 0.025},
              {'id': 2}, {'id': 3, 'load_p': 0.05, 'load_q': 0.025},
              {'id': 4}],
    'lines': [{'from': k, 'to': k + 1, 'r': 0.01, 'x': 0.02}
              for k in range(4)],
    'ders': [{'bus': 2, 'q_min': -0.3, 'q_max': 0.3, 'pv_capacity': 0.2},
             {'bus': 4, 'q_min': -0.3, 'q_max': 0.3, 'pv_capacity': 0.2}],
    'limits': {'v_min': 0.95, 'v_max': 1.05},
}


class TestExperimentWorker(base.TestCase):
    def setUp(self):
        super(TestExperimentWorker, self).setUp()
        self.tmp = self.useFixture(fixtures.TempDir()).path
        feeder_file = os.path.join(self.tmp, 'feeder.json')
        with open(feeder_file, 'w') as handle:
            json.dump(FEEDER, handle)
        self.out = os.path.join(self.tmp, 'run')
        conf = self.conf
        conf.config(feeder_file=feeder_file, out=self.out, workers=1,
                    seed=4, alpha=0.5,
                    prometheus_textfile=os.path.join(self.tmp, 'm.prom'))
        conf.config(scenario_count=6, profile_steps=48,
                    pseudo_low_count=5, pseudo_high_count=5,
                    group='dataset')
        conf.config(neurons=5, episodes=30, group='training')
        conf.config(iterations=20, flow_model=constants.FLOW_LINEARIZED,
                    group='control')
        conf.config(alphas=[0.5], noise_levels=[0.0, 0.01],
                    group='evaluation')
        self.useFixture(fixtures.MockPatchObject(
            driver_utils, 'get_controller_class',
            side_effect=fakes.DRIVERS.__getitem__))
        self.worker = experiment.ExperimentWorker()
        self.addCleanup(self.worker.shutdown)

    def _exists(self, *parts):
        return os.path.isfile(os.path.join(self.out, *parts))

    def test_scenarios(self):
        forecast = self.worker.forecast_scenarios()
        realized = self.worker.realized_scenarios()
        self.assertEqual(6, len(forecast))
        self.assertEqual(6, len(realized))
        np.testing.assert_array_equal(
            self.worker.base_profiles.to_numpy()[8, :4], forecast[1].p)
        self.assertFalse(np.array_equal(forecast[1].p, realized[1].p))

    def test_synthesized_profiles_persisted(self):
        base_profiles = self.worker.base_profiles
        self.assertTrue(self._exists(constants.FILE_PROFILES))
        self.conf.config(profiles_file=os.path.join(
            self.out, constants.FILE_PROFILES))
        worker = experiment.ExperimentWorker()
        self.addCleanup(worker.shutdown)
        np.testing.assert_array_equal(base_profiles.to_numpy(),
                                      worker.base_profiles.to_numpy())

    def test_build_dataset(self):
        datasets, skip_log = self.worker.build_dataset(0.5)
        self.assertEqual([], skip_log)
        self.assertEqual([2, 4], [d.der_bus for d in datasets])
        self.assertEqual((6, 5, 5), datasets[0].counts)
        self.assertTrue(self._exists('alpha_0.5', 'datasets', 'der_2.csv'))
        self.assertTrue(self._exists('alpha_0.5', constants.FILE_ORPF))
        self.assertTrue(self._exists('alpha_0.5', constants.FILE_SKIPPED))

    def test_slope_limit(self):
        self.assertIsNone(self.worker.slope_limit())
        self.conf.config(slope_limit='auto', group='training')
        self.assertAlmostEqual(
            simulator.auto_slope_limit(self.worker.model.x_norm),
            self.worker.slope_limit())
        self.conf.config(slope_limit='7.5', group='training')
        self.assertEqual(7.5, self.worker.slope_limit())

    def test_train_and_bound(self):
        self.worker.build_dataset(0.5)
        report = self.worker.train(0.5)
        self.assertEqual([2, 4], report['der_bus'].tolist())
        self.assertTrue(np.all(report['neurons'] == 5))
        self.assertTrue(self._exists('alpha_0.5', 'functions', 'der_4.json'))
        self.assertTrue(self._exists('alpha_0.5', constants.FILE_DROOP))
        self.assertTrue(self._exists('alpha_0.5',
                                     constants.FILE_TRAIN_REPORT))
        bound = self.worker.bound(0.5)
        self.assertEqual(report['global_lipschitz'].iloc[0],
                         bound['global_lipschitz'])
        self.assertAlmostEqual(0.9 * bound['stepsize_bound'],
                               bound['auto_epsilon'])
        self.assertIn('lipschitz_der_2', bound)
        self.assertTrue(self._exists('alpha_0.5', constants.FILE_BOUND))

    def test_train_needs_datasets(self):
        self.assertRaises(exceptions.MissingArtifactsError,
                          self.worker.train, 0.5)

    def test_simulate(self):
        self.worker.build_dataset(0.5)
        self.worker.train(0.5)
        summary = self.worker.simulate(0.5, constants.CONTROLLER_INCREMENTAL,
                                       0.0)
        self.assertEqual(6, summary['scenarios'])
        self.assertEqual(0, summary['box_violations'])
        self.assertLessEqual(summary['epsilon'], 1.0)
        self.assertTrue(self._exists('alpha_0.5', 'traces',
                                     'incremental_noise_0.csv'))
        self.assertTrue(self._exists('alpha_0.5', 'summaries',
                                     'incremental_noise_0.csv'))
        self.assertTrue(self._exists('alpha_0.5', 'summaries',
                                     'incremental_noise_0_per_step.csv'))
        self.assertTrue(self._exists('alpha_0.5', constants.FILE_REFERENCE))

    def test_simulate_fixed_epsilon(self):
        self.worker.build_dataset(0.5)
        self.worker.train(0.5)
        summary = self.worker.simulate(0.5, constants.CONTROLLER_INCREMENTAL,
                                       0.0, epsilon=0.05)
        self.assertEqual(0.05, summary['epsilon'])

    def test_evaluate_requires_artifacts(self):
        err = self.assertRaises(exceptions.MissingArtifactsError,
                                self.worker.evaluate)
        self.assertTrue(any('der_2.csv' in path for path in err.missing))

    def test_evaluate_reports_missing_functions(self):
        self.worker.build_dataset(0.5)
        self.worker.train(0.5)
        functions = os.path.join(self.out, 'alpha_0.5', 'functions')
        os.rename(os.path.join(functions, 'der_4.json'),
                  os.path.join(functions, 'der_9.json'))
        err = self.assertRaises(exceptions.MissingArtifactsError,
                                self.worker.evaluate)
        self.assertIn(os.path.join(functions, 'der_4.json'), err.missing)
        self.assertFalse(any(p.endswith('der_2.json') for p in err.missing))
        self.assertFalse(any(p.endswith(constants.FILE_DROOP)
                             for p in err.missing))

    def test_evaluate_completes_missing(self):
        self.conf.config(complete_missing=True, group='evaluation')
        losses, distances, noise = self.worker.evaluate()
        kinds = list(constants.EVALUATED_CONTROLLERS)
        self.assertEqual(kinds, list(losses.index))
        self.assertEqual(['0.5'], list(losses.columns))
        self.assertEqual(['0.5'], list(distances.columns))
        self.assertEqual(['0', '0.01'], list(noise.columns))
        self.assertTrue(np.all(np.isfinite(losses.to_numpy())))
        self.assertTrue(np.all(losses.to_numpy() >= 0.0))
        for name in (constants.FILE_LOSSES, constants.FILE_DISTANCES,
                     constants.FILE_NOISE):
            self.assertTrue(self._exists('evaluation', name))
        self.assertTrue(self._exists('alpha_0.5', 'traces',
                                     'droop_standard_noise_0.01.csv'))
        np.testing.assert_allclose(distances['0.5'].to_numpy(),
                                   noise['0'].to_numpy())

    def test_write_metrics(self):
        self.worker.write_metrics()
        self.assertTrue(os.path.isfile(os.path.join(self.tmp, 'm.prom')))

    def test_threaded_executor(self):
        self.conf.config(workers=3)
        worker = experiment.ExperimentWorker()
        self.addCleanup(worker.shutdown)
        self.assertIsInstance(worker.executor, futurist.ThreadPoolExecutor)
        self.assertIsInstance(self.worker.executor,
                              futurist.SynchronousExecutor)
