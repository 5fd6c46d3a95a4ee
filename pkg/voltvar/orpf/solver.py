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
Optimal reactive power flow under the linearized voltage model.

    min  alpha ||A q + c|| + (1 - alpha) (q_full' R q_full + p' R p)
    s.t. q_min <= q <= q_max,  v_min <= A q + v_hat <= v_max

with A = X[:, C] and c = v_hat - 1. The problem is split as
min f(q) + g(F q) with F = [A; A; I]; g holds the norm, the voltage box
and the reactive box, each with a closed form proximal map.
"""

import numpy as np
from oslo_config import cfg
from oslo_log import log as logging
from scipy import linalg
from scipy import optimize

from voltvar.common import constants
from voltvar.common import data_models
from voltvar.utils import decorators
from voltvar.utils import exceptions

CONF = cfg.CONF
CONF.import_group('orpf', 'voltvar.common.config')
LOG = logging.getLogger(__name__)

# residual balancing, frozen after RHO_MAX_UPDATES rescalings or once both
# residuals are within RHO_FREEZE_FACTOR of the tolerance
RHO_MU = 10.0
RHO_TAU = 2.0
RHO_UPDATE_INTERVAL = 10
RHO_MAX_UPDATES = 8
RHO_FREEZE_FACTOR = 10.0
RHO_MIN = 1e-2
RHO_MAX = 1e2


def _linear_terms(instance):
    model = instance.model
    A = model.x_tilde[:, model.der_index]
    v_hat = model.v_hat(instance.scenario)
    return A, v_hat


def evaluate_cost(instance, q_c):
    """ORPF cost of setpoints q_c, q_L of the scenario completes q."""
    model = instance.model
    scenario = instance.scenario
    q_c = np.asarray(q_c, dtype=float)
    v = model.x_tilde[:, model.der_index] @ q_c + model.v_hat(scenario)
    q = model.q_full(scenario, q_c)
    losses = q @ model.r_tilde @ q + scenario.p @ model.r_tilde @ scenario.p
    return float(instance.alpha * np.linalg.norm(v - 1.0)
                 + (1.0 - instance.alpha) * losses)


def check_feasibility(instance):
    """Phase one: least total voltage violation over the reactive box.

    :return: (feasible, violation, q) with q attaining the violation
    """
    A, v_hat = _linear_terms(instance)
    n, c = A.shape
    eye = np.eye(n)
    # variables [q, s_low, s_high], all slacks nonnegative
    cost = np.concatenate([np.zeros(c), np.ones(2 * n)])
    a_ub = np.vstack([np.hstack([-A, -eye, np.zeros((n, n))]),
                      np.hstack([A, np.zeros((n, n)), -eye])])
    b_ub = np.concatenate([v_hat - instance.v_min, instance.v_max - v_hat])
    bounds = (list(zip(instance.q_min, instance.q_max))
              + [(0.0, None)] * (2 * n))
    result = optimize.linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds,
                              method='highs')
    if result.status != 0:
        raise exceptions.NumericalError(
            "feasibility LP failed for scenario {}: {}".format(
                instance.scenario.index, result.message))
    violation = max(float(result.fun), 0.0)
    feasible = violation <= CONF.orpf.feasibility_tolerance
    return feasible, violation, np.clip(result.x[:c], instance.q_min,
                                        instance.q_max)


def _block_soft_threshold(x, kappa):
    norm = np.linalg.norm(x)
    if norm <= kappa:
        return np.zeros_like(x)
    return (1.0 - kappa / norm) * x


class _Splitting(object):
    """Scaled-form alternating direction iteration for one instance."""

    def __init__(self, instance, rho):
        model = instance.model
        self.alpha = instance.alpha
        self.A, v_hat = _linear_terms(instance)
        self.n, self.c = self.A.shape
        self.offset = v_hat - 1.0
        self.v_low = instance.v_min - v_hat
        self.v_high = instance.v_max - v_hat
        self.q_min = instance.q_min
        self.q_max = instance.q_max
        self.R = model.R
        self.linear = 2.0 * (1.0 - self.alpha) * (
            model.R_L @ instance.scenario.q_L)
        self.gram = 2.0 * self.A.T @ self.A + np.eye(self.c)
        self.rho = rho
        self._factorize()

    def _factorize(self):
        system = 2.0 * (1.0 - self.alpha) * self.R + self.rho * self.gram
        self.factor = linalg.cho_factor(system)

    def forward(self, q):
        aq = self.A @ q
        return np.concatenate([aq, aq, q])

    def adjoint(self, w):
        n = self.n
        return self.A.T @ (w[:n] + w[n:2 * n]) + w[2 * n:]

    def update_q(self, w, u):
        rhs = -self.linear + self.rho * self.adjoint(w - u)
        return linalg.cho_solve(self.factor, rhs)

    def prox(self, z):
        n = self.n
        w = np.empty_like(z)
        w[:n] = _block_soft_threshold(z[:n] + self.offset,
                                      self.alpha / self.rho) - self.offset
        w[n:2 * n] = np.clip(z[n:2 * n], self.v_low, self.v_high)
        w[2 * n:] = np.clip(z[2 * n:], self.q_min, self.q_max)
        return w

    def rescale(self, factor):
        self.rho *= factor
        self._factorize()


@decorators.RaisesNumericalError('ORPF solve')
def solve_orpf(instance, tolerance=None, max_iterations=None, rho=None,
               adaptive_rho=None):
    """Minimize the ORPF cost of one scenario.

    The returned setpoints are the reactive-box copy of the split
    variable, so they always lie in the box. duals stacks the multipliers
    of the deviation norm, the voltage band and the reactive box.
    """
    instance.validate()
    tolerance = CONF.orpf.tolerance if tolerance is None else tolerance
    max_iterations = CONF.orpf.max_iterations if max_iterations is None \
        else max_iterations
    rho = CONF.orpf.rho if rho is None else rho
    adaptive_rho = CONF.orpf.adaptive_rho if adaptive_rho is None \
        else adaptive_rho
    model = instance.model
    scenario = instance.scenario

    feasible, violation, _ = check_feasibility(instance)
    if not feasible:
        LOG.debug("Scenario %d infeasible, minimum voltage violation %.3e",
                  scenario.index, violation)
        return data_models.ORPFSolution(
            q_star=np.full(model.c, np.nan), v_star=np.full(model.n, np.nan),
            status=constants.STATUS_INFEASIBLE, violation=violation,
            scenario_index=scenario.index)

    split = _Splitting(instance, rho)
    q = np.zeros(model.c)
    w = split.prox(split.forward(q))
    u = np.zeros_like(w)
    primal = dual = np.inf
    iterations = 0
    rho_updates = 0
    status = constants.STATUS_MAX_ITER
    for iterations in range(1, max_iterations + 1):
        q = split.update_q(w, u)
        fq = split.forward(q)
        w_prev = w
        w = split.prox(fq + u)
        u = u + fq - w
        primal = float(np.max(np.abs(fq - w)))
        dual = float(split.rho * np.max(np.abs(split.adjoint(w - w_prev))))
        if primal <= tolerance and dual <= tolerance:
            status = constants.STATUS_OPTIMAL
            break
        if adaptive_rho and iterations % RHO_UPDATE_INTERVAL == 0:
            adaptive_rho = (rho_updates < RHO_MAX_UPDATES and
                            max(primal, dual) > RHO_FREEZE_FACTOR * tolerance)
            factor = 1.0
            if adaptive_rho and primal > RHO_MU * dual \
                    and split.rho * RHO_TAU <= RHO_MAX:
                factor = RHO_TAU
            elif adaptive_rho and dual > RHO_MU * primal \
                    and split.rho / RHO_TAU >= RHO_MIN:
                factor = 1.0 / RHO_TAU
            if factor != 1.0:
                # scaled multipliers keep rho * u fixed
                split.rescale(factor)
                u = u / factor
                rho_updates += 1

    q_star = w[2 * split.n:].copy()
    v_star = split.A @ q_star + split.offset + 1.0
    if status == constants.STATUS_MAX_ITER:
        LOG.warning("ORPF for scenario %d stopped after %d iterations "
                    "(primal %.3e, dual %.3e)", scenario.index, iterations,
                    primal, dual)
    return data_models.ORPFSolution(
        q_star=q_star, v_star=v_star,
        objective=evaluate_cost(instance, q_star), status=status,
        kkt_residual=max(primal, dual), iterations=iterations,
        violation=violation, scenario_index=scenario.index,
        duals=split.rho * u)
