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

"""
Closed loop of local Volt/Var controllers and the power flow.

Every step the voltages are solved for the current setpoints, each DER
measures its own voltage and all DERs update synchronously.
"""

import numpy as np
from oslo_config import cfg
from oslo_log import log as logging
from scipy import linalg

from voltvar.common import constants
from voltvar.common import data_models
from voltvar.grid import power_flow
from voltvar.utils import exceptions
from voltvar.utils import seeding

CONF = cfg.CONF
CONF.import_group('control', 'voltvar.common.config')
LOG = logging.getLogger(__name__)

EQUILIBRIUM_MAX_ITERATIONS = 1000000


def stepsize_bound(x_norm, lipschitz):
    """Largest stepsize with global asymptotic stability guaranteed."""
    return min(1.0, 2.0 / (x_norm * lipschitz + 1.0) ** 2)


def local_stepsize_bound(x_norm, lipschitz):
    """Stepsize range of local asymptotic stability around equilibrium."""
    return min(1.0, 2.0 / (x_norm * lipschitz + 1.0))


def auto_epsilon(x_norm, lipschitz):
    return constants.EPSILON_SAFETY * stepsize_bound(x_norm, lipschitz)


def non_incremental_certified(x_norm, lipschitz):
    return x_norm * lipschitz < constants.NON_INCREMENTAL_THRESHOLD


def global_lipschitz(functions):
    return max(phi.lipschitz for phi in functions)


def control_step(q, v_measured, phis, epsilon):
    """q+ = q + epsilon (phi(v) - q), DER by DER."""
    q = np.asarray(q, dtype=float)
    target = np.array([float(phi(v)) for phi, v in zip(phis, v_measured)])
    return q + epsilon * (target - q)


def voltage_map(model, phis, epsilon, scenario, v_c):
    """Voltage of the DER buses one linearized step after v_c."""
    v_hat = model.v_hat(scenario)[model.der_index]
    target = np.array([float(phi(v)) for phi, v in zip(phis, v_c)])
    return (1.0 - epsilon) * v_c + epsilon * (model.X @ target + v_hat)


def contraction_factor(x_norm, lipschitz, epsilon):
    """Bound on the voltage map's contraction in the X^-1 weighted norm."""
    return max(1.0 - epsilon,
               abs(1.0 - epsilon * (1.0 + x_norm * lipschitz)))


def contraction_ratio(model, phis, epsilon, scenario, v_a, v_b,
                      weighted=True):
    """||g(v_a) - g(v_b)|| / ||v_a - v_b|| of the voltage map.

    :param weighted: measure in the X^-1 weighted norm, else Euclidean
    """
    chol = linalg.cho_factor(model.X) if weighted else None

    def _norm(y):
        if chol is None:
            return float(np.linalg.norm(y))
        return float(np.sqrt(y @ linalg.cho_solve(chol, y)))

    diff = np.asarray(v_a) - np.asarray(v_b)
    image = (voltage_map(model, phis, epsilon, scenario, v_a)
             - voltage_map(model, phis, epsilon, scenario, v_b))
    return _norm(image) / _norm(diff)


def _solve_voltages(model, scenario, q, flow_model):
    if flow_model == constants.FLOW_LINEARIZED:
        return power_flow.solve_linearized(model, scenario, q), True
    solution = power_flow.solve_ac(model, scenario, q)
    return solution.v, solution.converged


def detect_oscillation(trace, threshold):
    """Large final residual with increments mostly flipping direction."""
    if trace.converged or trace.residual.shape[0] < 4:
        return False
    if trace.residual[-1] <= threshold:
        return False
    q_rows = np.vstack([trace.q_history, trace.next_q[None, :]])
    increments = np.diff(q_rows, axis=0)
    tail = increments[increments.shape[0] // 2:]
    products = np.einsum('ij,ij->i', tail[:-1], tail[1:])
    return bool(np.count_nonzero(products < 0.0) > 0.5 * products.shape[0])


def _run_scenario(model, controller, config, scenario, q0, rng):
    iterations = config.iterations
    q_history = np.empty((iterations, model.c))
    v_history = np.empty((iterations, model.n))
    residual = np.empty(iterations)
    q = q0.copy()
    converged = False
    verdict = constants.VERDICT_NOT_CONVERGED
    steps = iterations

    for t in range(iterations):
        v, ok = _solve_voltages(model, scenario, q, config.flow_model)
        if not ok:
            LOG.warning("AC power flow diverged in scenario %d at step %d, "
                        "continuing with the next scenario",
                        scenario.index, t)
            q_history[t:] = q
            v_history[t:] = v if np.all(np.isfinite(v)) else np.nan
            residual[t:] = np.nan
            return data_models.SimulationTrace(
                q_history=q_history, v_history=v_history, residual=residual,
                verdict=constants.VERDICT_AC_FAILURE,
                scenario_index=scenario.index, steps=t, ac_failures=1,
                next_q=q)
        q_history[t] = q
        v_history[t] = v

        v_meas = v[model.der_index]
        if config.noise > 0.0:
            v_meas = v_meas * (1.0 + rng.uniform(-config.noise, config.noise,
                                                 model.c))
        q_next = controller.step(q, v_meas)
        residual[t] = float(np.max(np.abs(q_next - q)))
        q = q_next

        if residual[t] <= config.convergence_tolerance:
            converged = True
            verdict = constants.VERDICT_CONVERGED
            steps = t + 1
            if t + 1 < iterations:
                v_fixed, _ = _solve_voltages(model, scenario, q,
                                             config.flow_model)
                q_history[t + 1:] = q
                v_history[t + 1:] = v_fixed
                residual[t + 1:] = residual[t]
            break

    trace = data_models.SimulationTrace(
        q_history=q_history, v_history=v_history, residual=residual,
        converged=converged, verdict=verdict, scenario_index=scenario.index,
        steps=steps, next_q=q)
    if converged:
        trace.q_fixed = q.copy()
        trace.v_fixed = v_history[-1].copy()
    elif detect_oscillation(trace, config.divergence_threshold):
        trace.verdict = constants.VERDICT_OSCILLATING
        LOG.warning("Controller %s oscillates in scenario %d, final "
                    "residual %.3e", config.kind, scenario.index,
                    residual[-1])
    return trace


def simulate(model, controller, config, scenarios, q0=None):
    """Run the closed loop over a sequence of scenarios.

    The setpoints carry over from one scenario to the next. Returns one
    SimulationTrace per scenario.
    """
    config.validate()
    q = np.zeros(model.c) if q0 is None else np.asarray(q0, dtype=float)
    if np.any(q < model.q_min) or np.any(q > model.q_max):
        raise exceptions.InvalidParameterError(
            "initial setpoints must lie in the reactive box")
    rng = seeding.rng_for(config.seed, constants.SEED_NOISE.format(
        config.kind, config.noise))

    traces = []
    for scenario in scenarios:
        trace = _run_scenario(model, controller, config, scenario, q, rng)
        traces.append(trace)
        q = trace.next_q
    verdicts = [t.verdict for t in traces]
    LOG.info("Simulated %s controller over %d scenarios: %d converged, "
             "%d oscillating, %d AC failures", config.kind, len(traces),
             verdicts.count(constants.VERDICT_CONVERGED),
             verdicts.count(constants.VERDICT_OSCILLATING),
             verdicts.count(constants.VERDICT_AC_FAILURE))
    return traces


def find_equilibrium(model, phis, tol=None, scenario=None, q0=None,
                     max_iterations=EQUILIBRIUM_MAX_ITERATIONS):
    """Unique fixed point q = phi(X q + v_hat) of the linearized loop.

    Iterates the incremental rule at 0.9 times the stability bound,
    starting from phi(v_hat) unless q0 is given.
    """
    tol = CONF.control.equilibrium_tolerance if tol is None else tol
    scenario = scenario or data_models.Scenario.zero(model)
    v_hat = model.v_hat(scenario)[model.der_index]
    epsilon = auto_epsilon(model.x_norm, global_lipschitz(phis))

    def _phi(v):
        return np.array([float(phi(x)) for phi, x in zip(phis, v)])

    q = _phi(v_hat) if q0 is None else np.asarray(q0, dtype=float).copy()
    gap = np.inf
    for _ in range(max_iterations):
        v = model.X @ q + v_hat
        gap_vector = _phi(v) - q
        gap = float(np.max(np.abs(gap_vector)))
        if gap <= tol:
            return q, v
        q = q + epsilon * gap_vector
    raise exceptions.EquilibriumNotFoundError(iterations=max_iterations,
                                              residual=gap)


def auto_slope_limit(x_norm):
    """Slope cap keeping ||X|| L under the non-incremental threshold."""
    return (constants.NON_INCREMENTAL_THRESHOLD / x_norm
            * constants.SLOPE_LIMIT_MARGIN)
