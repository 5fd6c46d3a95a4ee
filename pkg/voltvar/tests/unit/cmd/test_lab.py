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

import io
import json
import os
from unittest import mock

import fixtures
import pandas as pd

from voltvar.cmd import lab
from voltvar.common import config
from voltvar.db import api
from voltvar.tests.unit import base
from voltvar.utils import exceptions
from voltvar.worker import experiment


class TestTranslateArgs(base.TestCase):
    def test_config_alias(self):
        self.assertEqual(
            ['--config-file', 'a.conf', '--seed', '3', 'train'],
            lab._translate_args(['--config', 'a.conf', 'train', '--seed',
                                 '3']))
        self.assertEqual(
            ['--config-file=a.conf', 'bound'],
            lab._translate_args(['--config=a.conf', 'bound']))

    def test_without_command(self):
        self.assertEqual(['--seed', '1'], lab._translate_args(['--seed', '1']))


class TestMain(base.TestCase):
    def setUp(self):
        super(TestMain, self).setUp()
        self.tmp = self.useFixture(fixtures.TempDir()).path
        self.stdout = io.StringIO()
        self.useFixture(fixtures.MonkeyPatch('sys.stdout', self.stdout))
        self.useFixture(fixtures.MonkeyPatch('sys.stderr', io.StringIO()))
        self.useFixture(fixtures.MockPatchObject(config, 'setup_logging'))
        patcher = fixtures.MockPatchObject(experiment, 'ExperimentWorker')
        self.worker_class = self.useFixture(patcher).mock
        self.worker = self.worker_class.return_value
        self.worker.run_dir = api.RunDirectory(self.tmp)

    def test_train(self):
        self.worker.train.return_value = pd.DataFrame({
            'der_bus': [2], 'mse': [0.1], 'mse_real': [0.2],
            'lipschitz': [3.0], 'global_lipschitz': [3.0],
            'stepsize_bound': [0.5]})
        code = lab.main(['--out', self.tmp, '--alpha', '0.25', 'train'])
        self.assertEqual(exceptions.EXIT_OK, code)
        self.worker.train.assert_called_once_with(0.25)
        self.worker.write_metrics.assert_called_once_with()
        self.worker.shutdown.assert_called_once_with()
        self.assertIn('stepsize bound = 0.5', self.stdout.getvalue())
        with open(os.path.join(self.tmp, 'run_config.json')) as handle:
            options = json.load(handle)
        self.assertEqual(0.25, options['DEFAULT']['alpha'])

    def test_simulate(self):
        self.worker.simulate.return_value = {'converged': 3}
        code = lab.main(['--out', self.tmp, '--controller', 'none',
                         '--noise', '0.01', 'simulate'])
        self.assertEqual(exceptions.EXIT_OK, code)
        self.worker.simulate.assert_called_once_with(0.5, 'none', 0.01)
        self.assertIn('converged = 3', self.stdout.getvalue())

    def test_infeasible_exit_code(self):
        self.worker.build_dataset.side_effect = \
            exceptions.EmptyDatasetError(count=4)
        code = lab.main(['--out', self.tmp, 'build-dataset'])
        self.assertEqual(exceptions.EXIT_INFEASIBLE, code)
        self.assertIn('skipped_scenarios.csv', self.stdout.getvalue())
        self.worker.shutdown.assert_called_once_with()

    def test_missing_artifacts_exit_code(self):
        self.worker.evaluate.side_effect = \
            exceptions.MissingArtifactsError(['functions/der_2.json'])
        code = lab.main(['--out', self.tmp, 'evaluate'])
        self.assertEqual(exceptions.EXIT_CONFIG, code)

    def test_unexpected_error(self):
        self.worker.bound.side_effect = RuntimeError('boom')
        code = lab.main(['--out', self.tmp, 'bound'])
        self.assertEqual(exceptions.EXIT_NUMERICAL, code)
        self.worker.write_metrics.assert_called_once_with()

    def test_missing_config_file(self):
        code = lab.main(['--config', os.path.join(self.tmp, 'absent.conf'),
                         'train'])
        self.assertEqual(exceptions.EXIT_CONFIG, code)
        self.worker_class.assert_not_called()

    def test_invalid_epsilon(self):
        code = lab.main(['--out', self.tmp, '--epsilon', '2', 'train'])
        self.assertEqual(exceptions.EXIT_CONFIG, code)
        self.worker_class.assert_not_called()

    def test_dispatch(self):
        mock_evaluate = mock.Mock()
        self.useFixture(fixtures.MockPatchObject(
            lab, 'COMMANDS', dict(lab.COMMANDS, evaluate=mock_evaluate)))
        code = lab.main(['--out', self.tmp, 'evaluate'])
        self.assertEqual(exceptions.EXIT_OK, code)
        mock_evaluate.assert_called_once_with(self.worker)
