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

from voltvar.common import constants
from voltvar.common import data_models
from voltvar.dataset import profiles
from voltvar.orpf import oracle
from voltvar.orpf import solver
from voltvar.tests.unit import base
from voltvar.tests.unit import fakes
from voltvar.utils import exceptions


ALPHAS = (0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0)


def _tight_feeder(rng, n, c):
    return fakes.random_radial_feeder(rng, n, c, r_range=(0.02, 0.08),
                                      x_range=(0.02, 0.08), v_min=0.95,
                                      v_max=1.05)


def _binding_instance(alpha, p=-6.0):
    # v = 0.94 + 0.02 q at p = -6, v_min = 0.95 needs q >= 0.5
    model = fakes.build(fakes.two_bus_feeder(r=0.01, x=0.02, q_limit=0.8))
    return data_models.ORPFInstance(
        model=model, scenario=fakes.scenario(model, p=[p]), alpha=alpha)


class TestSolver(base.TestCase):
    def test_losses_only_sits_on_voltage_limit(self):
        solution = solver.solve_orpf(_binding_instance(0.0))
        self.assertEqual(constants.STATUS_OPTIMAL, solution.status)
        self.assertAlmostEqual(0.5, solution.q_star[0], places=5)
        self.assertAlmostEqual(0.95, solution.v_star[0], places=6)

    def test_deviation_only_saturates(self):
        solution = solver.solve_orpf(_binding_instance(1.0))
        self.assertAlmostEqual(0.8, solution.q_star[0], places=5)
        self.assertAlmostEqual(0.956, solution.v_star[0], places=6)
        self.assertAlmostEqual(0.044, solution.objective, places=6)

    def test_infeasible(self):
        instance = _binding_instance(0.5, p=-20.0)
        feasible, violation, q = solver.check_feasibility(instance)
        self.assertFalse(feasible)
        self.assertAlmostEqual(0.95 - 0.816, violation, places=8)
        self.assertAlmostEqual(0.8, q[0], places=8)
        solution = solver.solve_orpf(instance)
        self.assertEqual(constants.STATUS_INFEASIBLE, solution.status)
        self.assertFalse(solution.feasible)
        self.assertTrue(np.all(np.isnan(solution.q_star)))

    def test_invalid_alpha(self):
        self.assertRaises(exceptions.InvalidParameterError,
                          solver.solve_orpf, _binding_instance(1.5))

    def test_max_iterations_keeps_box(self):
        solution = solver.solve_orpf(_binding_instance(0.5),
                                     max_iterations=3, adaptive_rho=False)
        self.assertEqual(constants.STATUS_MAX_ITER, solution.status)
        self.assertEqual(3, solution.iterations)
        self.assertTrue(solution.feasible)
        self.assertLessEqual(abs(solution.q_star[0]), 0.8)

    def test_evaluate_cost(self):
        instance = _binding_instance(0.25)
        # 0.25 |0.94 + 0.02 q - 1| + 0.75 * 0.01 (q^2 + 36)
        expected = 0.25 * 0.05 + 0.75 * 0.01 * (0.25 + 36.0)
        self.assertAlmostEqual(expected,
                               solver.evaluate_cost(instance, [0.5]))

    def test_matches_grid_search_with_binding_limits(self):
        rng = np.random.default_rng(2024)
        compared = 0
        for trial in range(25):
            n = int(rng.integers(1, 6))
            c = int(rng.integers(1, min(n, 3) + 1))
            model = fakes.build(_tight_feeder(rng, n, c))
            instance = data_models.ORPFInstance(
                model=model, scenario=fakes.random_scenario(rng, model),
                alpha=ALPHAS[trial % len(ALPHAS)])
            solution = solver.solve_orpf(instance)
            reference = oracle.grid_search_oracle(instance, 21, refine=8)
            message = "trial {} alpha {}".format(trial, instance.alpha)
            self.assertNotEqual(constants.STATUS_MAX_ITER, solution.status,
                                message)
            if not solution.feasible:
                # a voltage-feasible grid point would contradict phase one
                self.assertFalse(reference.feasible, message)
                continue
            self.assertTrue(np.all(solution.q_star >= model.q_min))
            self.assertTrue(np.all(solution.q_star <= model.q_max))
            if not reference.feasible:
                continue
            compared += 1
            self.assertLessEqual(solution.objective,
                                 reference.objective + 1e-4, message)
            self.assertLessEqual(reference.objective,
                                 solution.objective + 1e-4, message)
        self.assertGreaterEqual(compared, 5)

    def test_deviation_only_single_der(self):
        # one DER: the minimizer is the least squares setpoint projected
        # onto the voltage-feasible interval of the box
        rng = np.random.default_rng(24)
        checked = 0
        for trial in range(20):
            model = fakes.build(_tight_feeder(rng, 5, 1))
            instance = data_models.ORPFInstance(
                model=model, scenario=fakes.random_scenario(rng, model),
                alpha=1.0)
            a = model.x_tilde[:, model.der_index[0]]
            v_hat = model.v_hat(instance.scenario)
            coupled = np.abs(a) > 1e-9
            # buses off the DER path keep their voltage whatever q is
            fixed_margin = np.min(np.minimum(
                v_hat[~coupled] - instance.v_min[~coupled],
                instance.v_max[~coupled] - v_hat[~coupled]),
                initial=np.inf)
            bounds = np.sort(np.vstack([
                (instance.v_min[coupled] - v_hat[coupled]) / a[coupled],
                (instance.v_max[coupled] - v_hat[coupled]) / a[coupled]]),
                axis=0)
            low = max(model.q_min[0], np.max(bounds[0], initial=-np.inf))
            high = min(model.q_max[0], np.min(bounds[1], initial=np.inf))
            if abs(low - high) < 1e-6 or abs(fixed_margin) < 1e-6:
                continue
            solution = solver.solve_orpf(instance)
            message = "trial {}".format(trial)
            if low > high or fixed_margin < 0.0:
                self.assertEqual(constants.STATUS_INFEASIBLE,
                                 solution.status, message)
                continue
            checked += 1
            offset = v_hat - 1.0
            expected = np.clip(-(a @ offset) / (a @ a), low, high)
            self.assertEqual(constants.STATUS_OPTIMAL, solution.status,
                             message)
            self.assertAlmostEqual(expected, solution.q_star[0], places=5,
                                   msg=message)
        self.assertGreaterEqual(checked, 3)

    def _assert_certificate(self, instance, solution):
        model = instance.model
        alpha = instance.alpha
        n = model.n
        A = model.x_tilde[:, model.der_index]
        y = solution.duals
        q = solution.q_star
        self.assertEqual(2 * n + model.c, y.shape[0])
        self.assertLessEqual(solution.kkt_residual, 1e-8)

        gradient = 2.0 * (1.0 - alpha) * (
            model.R @ q + model.R_L @ instance.scenario.q_L)
        stationarity = gradient + A.T @ (y[:n] + y[n:2 * n]) + y[2 * n:]
        np.testing.assert_allclose(stationarity, 0.0, atol=1e-7)

        self.assertLessEqual(np.linalg.norm(y[:n]), alpha + 1e-12)
        v = solution.v_star
        upper, lower = y[n:2 * n] > 0.0, y[n:2 * n] < 0.0
        np.testing.assert_allclose(v[upper], instance.v_max[upper],
                                   atol=1e-6)
        np.testing.assert_allclose(v[lower], instance.v_min[lower],
                                   atol=1e-6)
        box = y[2 * n:]
        np.testing.assert_array_equal(q[box > 0.0], model.q_max[box > 0.0])
        np.testing.assert_array_equal(q[box < 0.0], model.q_min[box < 0.0])

    def test_optimality_certificate(self):
        instance = _binding_instance(0.0)
        solution = solver.solve_orpf(instance)
        self._assert_certificate(instance, solution)
        # the voltage limit carries the multiplier
        self.assertLess(solution.duals[1], 0.0)

        rng = np.random.default_rng(11)
        for trial in range(10):
            model = fakes.build(_tight_feeder(rng, 4, 2))
            instance = data_models.ORPFInstance(
                model=model, scenario=fakes.random_scenario(rng, model),
                alpha=ALPHAS[trial % len(ALPHAS)])
            solution = solver.solve_orpf(instance)
            if solution.optimal:
                self._assert_certificate(instance, solution)

    def test_replay_is_bit_identical(self):
        spec = fakes.path_feeder(n=4, der_buses=(2, 4), v_min=0.97,
                                 v_max=1.03)
        model = fakes.build(spec)
        frame = profiles.synthesize_profiles(spec, steps=48, seed=3)

        def _solve():
            scenarios = profiles.generate_scenarios(
                frame, spec, 6, perturbation=0.2, seed=3)
            return [solver.solve_orpf(data_models.ORPFInstance(
                model=model, scenario=scenario, alpha=0.5))
                for scenario in scenarios]

        first, second = _solve(), _solve()
        for a, b in zip(first, second):
            self.assertEqual(a.status, b.status)
            self.assertEqual(a.iterations, b.iterations)
            np.testing.assert_array_equal(a.q_star, b.q_star)
