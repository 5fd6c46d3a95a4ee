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

from unittest import mock

import numpy as np

from voltvar.common import constants
from voltvar.common import data_models
from voltvar.control import simulator
from voltvar.control.drivers import incremental
from voltvar.grid import power_flow
from voltvar.tests.unit import base
from voltvar.tests.unit import fakes
from voltvar.utils import exceptions


class TestStability(base.TestCase):
    def test_bounds(self):
        self.assertAlmostEqual(0.125, simulator.stepsize_bound(0.02, 150.0))
        self.assertAlmostEqual(0.5,
                               simulator.local_stepsize_bound(0.02, 150.0))
        self.assertEqual(1.0, simulator.stepsize_bound(0.02, 10.0))
        self.assertAlmostEqual(0.1125, simulator.auto_epsilon(0.02, 150.0))
        self.assertTrue(simulator.non_incremental_certified(0.02, 10.0))
        self.assertFalse(simulator.non_incremental_certified(0.02, 150.0))
        self.assertAlmostEqual((2 ** 0.5 - 1) / 0.02 * 0.99,
                               simulator.auto_slope_limit(0.02))
        self.assertTrue(simulator.non_incremental_certified(
            0.02, simulator.auto_slope_limit(0.02)))

    def test_contraction_factor(self):
        self.assertAlmostEqual(0.8875,
                               simulator.contraction_factor(0.02, 150.0,
                                                            0.1125))
        self.assertAlmostEqual(3.0,
                               simulator.contraction_factor(0.02, 150.0, 1.0))

    def test_global_lipschitz(self):
        functions = [fakes.linear_function(3.0), fakes.linear_function(7.0)]
        self.assertEqual(7.0, simulator.global_lipschitz(functions))

    def test_control_step(self):
        functions = [fakes.linear_function(10.0)]
        np.testing.assert_allclose(
            [0.05], simulator.control_step([0.0], [0.99], functions, 0.5))

    def test_contraction_in_weighted_norm(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            n = int(rng.integers(2, 8))
            c = int(rng.integers(1, min(n, 4) + 1))
            model = fakes.build(fakes.random_radial_feeder(rng, n, c))
            lipschitz = rng.uniform(0.5, 5.0) / model.x_norm
            phis = [fakes.random_function(rng, lipschitz) for _ in range(c)]
            global_l = simulator.global_lipschitz(phis)
            epsilon = simulator.auto_epsilon(model.x_norm, global_l)
            factor = simulator.contraction_factor(model.x_norm, global_l,
                                                  epsilon)
            self.assertLess(factor, 1.0)
            scenario = fakes.random_scenario(rng, model)
            for _ in range(20):
                v_a = rng.uniform(0.9, 1.1, c)
                v_b = rng.uniform(0.9, 1.1, c)
                ratio = simulator.contraction_ratio(model, phis, epsilon,
                                                    scenario, v_a, v_b)
                self.assertLessEqual(ratio, factor + 1e-9)
                self.assertLessEqual(ratio, 1.0 - 1e-6)

    def test_contraction_in_euclidean_norm(self):
        rng = np.random.default_rng(34)
        pairs = 0
        for _ in range(10):
            n = int(rng.integers(2, 8))
            c = int(rng.integers(1, min(n, 4) + 1))
            model = fakes.build(fakes.random_radial_feeder(rng, n, c))
            lipschitz = rng.uniform(0.5, 5.0) / model.x_norm
            phis = [fakes.random_function(rng, lipschitz) for _ in range(c)]
            epsilon = simulator.auto_epsilon(
                model.x_norm, simulator.global_lipschitz(phis))
            scenario = fakes.random_scenario(rng, model)
            for _ in range(100):
                v_a = rng.uniform(0.9, 1.1, c)
                v_b = rng.uniform(0.9, 1.1, c)
                ratio = simulator.contraction_ratio(
                    model, phis, epsilon, scenario, v_a, v_b,
                    weighted=False)
                self.assertLessEqual(ratio, 1.0 - 1e-6)
                pairs += 1
        self.assertEqual(1000, pairs)


class TestEquilibrium(base.TestCase):
    def test_two_bus(self):
        model = fakes.build(fakes.two_bus_feeder())
        scenario = fakes.scenario(model, p=[0.5])
        q, v = simulator.find_equilibrium(
            model, [fakes.linear_function(150.0)], scenario=scenario)
        self.assertAlmostEqual(-0.1875, q[0], places=8)
        self.assertAlmostEqual(1.005 - 0.02 * 0.1875, v[0], places=8)

    def test_unique_from_any_start(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            n = int(rng.integers(2, 8))
            c = int(rng.integers(1, min(n, 4) + 1))
            model = fakes.build(fakes.random_radial_feeder(rng, n, c))
            phis = [fakes.random_function(rng, 1.0 / model.x_norm)
                    for _ in range(c)]
            scenario = fakes.random_scenario(rng, model)
            reference, _ = simulator.find_equilibrium(model, phis,
                                                      scenario=scenario)
            for _ in range(20):
                q0 = rng.uniform(model.q_min, model.q_max)
                q, _ = simulator.find_equilibrium(model, phis,
                                                  scenario=scenario, q0=q0)
                np.testing.assert_allclose(reference, q, atol=1e-7)

    def test_iteration_cap(self):
        model = fakes.build(fakes.two_bus_feeder())
        scenario = fakes.scenario(model, p=[0.5])
        err = self.assertRaises(exceptions.EquilibriumNotFoundError,
                                simulator.find_equilibrium, model,
                                [fakes.linear_function(150.0)],
                                scenario=scenario, max_iterations=2)
        self.assertIn('2 iterations', str(err))


class TestSimulate(base.TestCase):
    def setUp(self):
        super(TestSimulate, self).setUp()
        # v_hat = 1.005, ||X|| L = 3, equilibrium q = -0.1875
        self.model = fakes.build(fakes.two_bus_feeder())
        self.scenario = fakes.scenario(self.model, p=[0.5])
        self.functions = [fakes.linear_function(150.0)]

    def _simulate(self, epsilon, iterations=400, noise=0.0, functions=None,
                  scenarios=None, **kwargs):
        functions = functions or self.functions
        controller = incremental.IncrementalController(
            model=self.model, functions=functions, epsilon=epsilon)
        config = data_models.ControllerConfig(
            epsilon=epsilon, iterations=iterations, noise=noise, **kwargs)
        return simulator.simulate(self.model, controller, config,
                                  scenarios or [self.scenario])

    def test_oscillates_at_full_step(self):
        trace = self._simulate(1.0, iterations=50)[0]
        self.assertFalse(trace.converged)
        self.assertEqual(constants.VERDICT_OSCILLATING, trace.verdict)
        np.testing.assert_allclose([0.4], np.abs(trace.q_history[-1]))
        self.assertAlmostEqual(0.8, trace.residual[-1])

    def test_converges_below_bound(self):
        epsilon = simulator.auto_epsilon(self.model.x_norm, 150.0)
        trace = self._simulate(epsilon)[0]
        self.assertTrue(trace.converged)
        self.assertEqual(constants.VERDICT_CONVERGED, trace.verdict)
        self.assertAlmostEqual(-0.1875, trace.q_fixed[0], places=6)
        self.assertLess(trace.steps, 400)
        # rows after convergence repeat the fixed point
        np.testing.assert_allclose(trace.q_fixed, trace.q_history[-1])
        np.testing.assert_allclose(trace.v_fixed, trace.v_history[-1])
        self.assertEqual((400, 1), trace.q_history.shape)
        self.assertTrue(np.all(np.abs(trace.q_history) <= 0.4))

    def test_certified_full_step(self):
        trace = self._simulate(
            1.0, functions=[fakes.linear_function(10.0)])[0]
        self.assertTrue(trace.converged)
        self.assertAlmostEqual(-0.05 / 1.2, trace.q_fixed[0], places=7)

    def test_fixed_point_matches_equilibrium(self):
        epsilon = simulator.auto_epsilon(self.model.x_norm, 150.0)
        trace = self._simulate(epsilon)[0]
        q, _ = simulator.find_equilibrium(self.model, self.functions,
                                          scenario=self.scenario)
        np.testing.assert_allclose(q, trace.q_fixed, atol=1e-6)

    def test_warm_start(self):
        other = fakes.scenario(self.model, p=[0.2], index=1)
        epsilon = simulator.auto_epsilon(self.model.x_norm, 150.0)
        traces = self._simulate(epsilon, iterations=5,
                                scenarios=[self.scenario, other])
        self.assertEqual([0, 1], [t.scenario_index for t in traces])
        np.testing.assert_array_equal(traces[0].next_q,
                                      traces[1].q_history[0])
        self.assertEqual(constants.VERDICT_NOT_CONVERGED, traces[0].verdict)

    def test_noise_is_seeded(self):
        first = self._simulate(0.1, iterations=30, noise=0.01, seed=3)[0]
        again = self._simulate(0.1, iterations=30, noise=0.01, seed=3)[0]
        clean = self._simulate(0.1, iterations=30)[0]
        np.testing.assert_array_equal(first.q_history, again.q_history)
        self.assertFalse(np.array_equal(first.q_history, clean.q_history))

    def test_rejects_start_outside_box(self):
        controller = incremental.IncrementalController(
            model=self.model, functions=self.functions, epsilon=0.1)
        config = data_models.ControllerConfig(epsilon=0.1)
        self.assertRaises(exceptions.InvalidParameterError,
                          simulator.simulate, self.model, controller, config,
                          [self.scenario], q0=[0.5])
        self.assertRaises(exceptions.InvalidParameterError,
                          simulator.simulate, self.model, controller,
                          data_models.ControllerConfig(epsilon=1.5),
                          [self.scenario])

    @mock.patch.object(power_flow, 'solve_ac')
    def test_ac_failure(self, mock_solve_ac):
        mock_solve_ac.return_value = data_models.VoltageSolution(
            u=[np.nan], converged=False)
        traces = self._simulate(0.1, iterations=10,
                                flow_model=constants.FLOW_AC)
        self.assertEqual(constants.VERDICT_AC_FAILURE, traces[0].verdict)
        self.assertEqual(1, traces[0].ac_failures)
        self.assertEqual(0, traces[0].steps)
        self.assertTrue(np.all(np.isnan(traces[0].residual)))
        np.testing.assert_array_equal(np.zeros((10, 1)),
                                      traces[0].q_history)

    def test_ac_flow(self):
        epsilon = simulator.auto_epsilon(self.model.x_norm, 150.0)
        trace = self._simulate(epsilon, flow_model=constants.FLOW_AC)[0]
        self.assertTrue(trace.converged)
        self.assertAlmostEqual(-0.1875, trace.q_fixed[0], places=2)


class TestDetectOscillation(base.TestCase):
    def _trace(self, q, residual):
        q = np.asarray(q, dtype=float)[:, None]
        return data_models.SimulationTrace(
            q_history=q[:-1], v_history=np.ones_like(q[:-1]),
            residual=residual, next_q=q[-1])

    def test_alternating(self):
        q = [0.0, 0.4, -0.4, 0.4, -0.4, 0.4, -0.4]
        self.assertTrue(simulator.detect_oscillation(
            self._trace(q, [0.4, 0.8, 0.8, 0.8, 0.8, 0.8]), 1e-3))

    def test_monotone_drift(self):
        q = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
        self.assertFalse(simulator.detect_oscillation(
            self._trace(q, [0.1] * 6), 1e-3))

    def test_small_residual(self):
        q = [0.0, 1e-4, -1e-4, 1e-4, -1e-4, 1e-4, -1e-4]
        self.assertFalse(simulator.detect_oscillation(
            self._trace(q, [2e-4] * 6), 1e-3))

    def test_short_trace(self):
        self.assertFalse(simulator.detect_oscillation(
            self._trace([0.0, 0.4, -0.4], [0.4, 0.8]), 1e-3))
