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

import numpy as np

from voltvar.learning import optimizer
from voltvar.tests.unit import base


class TestAdam(base.TestCase):
    def test_first_step_is_signed_learning_rate(self):
        adam = optimizer.Adam(lr=0.1)
        params = {'x': np.array([1.0, -2.0, 0.5])}
        adam.step(params, {'x': np.array([4.0, -0.01, 100.0])})
        np.testing.assert_allclose([0.9, -1.9, 0.4], params['x'],
                                   atol=1e-6)
        self.assertEqual(1, adam.t)

    def test_minimizes_quadratic(self):
        adam = optimizer.Adam(lr=0.05)
        params = {'x': np.zeros(3), 'y': np.array([5.0])}
        target = np.array([1.0, -2.0, 3.0])
        for _ in range(3000):
            adam.step(params, {'x': 2.0 * (params['x'] - target),
                               'y': 2.0 * params['y']})
        np.testing.assert_allclose(target, params['x'], atol=5e-2)
        np.testing.assert_allclose([0.0], params['y'], atol=5e-2)

    def test_permute_moments(self):
        adam = optimizer.Adam()
        params = {'w': np.array([1.0, 2.0]), 'beta': np.array([0.0])}
        adam.step(params, {'w': np.array([1.0, 3.0]),
                           'beta': np.array([1.0])})
        m, v = adam.m['w'].copy(), adam.v['w'].copy()
        adam.permute(('w', 'missing'), np.array([1, 0]))
        np.testing.assert_array_equal(m[::-1], adam.m['w'])
        np.testing.assert_array_equal(v[::-1], adam.v['w'])
