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
from oslo_config import cfg
from oslo_log import log as logging

from voltvar.common import data_models
from voltvar.utils import exceptions

CONF = cfg.CONF
CONF.import_group('power_flow', 'voltvar.common.config')
LOG = logging.getLogger(__name__)


def _check_setpoints(model, q_c):
    q_c = np.atleast_1d(np.asarray(q_c, dtype=float))
    if q_c.shape != (model.c,):
        raise exceptions.InvalidParameterError(
            "expected {} DER setpoints, got {}".format(model.c,
                                                       q_c.shape[0]))
    return q_c


def power_mismatch(model, u, s):
    """Largest bus mismatch |s_n - u_n conj(i_n)| with i = Y(u - u_hat)."""
    current = model.y_tilde @ (u - model.u_hat)
    return float(np.max(np.abs(s - u * np.conj(current))))


def solve_ac(model, scenario, q_c, tolerance=None, max_iterations=None):
    """Z-bus fixed point u <- Z conj(s / u) + u_hat from a flat start.

    Non-convergence is reported, never raised: the returned solution then
    carries the last iterate.
    """
    tolerance = CONF.power_flow.tolerance if tolerance is None \
        else tolerance
    max_iterations = CONF.power_flow.max_iterations \
        if max_iterations is None else max_iterations
    q_c = _check_setpoints(model, q_c)
    s = scenario.p + 1j * model.q_full(scenario, q_c)

    u = model.u_hat.copy()
    residual = np.inf
    iterations = 0
    with np.errstate(all='ignore'):
        for iterations in range(1, max_iterations + 1):
            u = model.z_tilde @ np.conj(s / u) + model.u_hat
            if not np.all(np.isfinite(u)):
                residual = np.inf
                break
            residual = power_mismatch(model, u, s)
            if residual <= tolerance:
                return data_models.VoltageSolution(
                    u=u, converged=True, iterations=iterations,
                    residual=residual)

    LOG.debug("AC power flow did not converge for scenario %d after %d "
              "iterations (mismatch %.3e)", scenario.index, iterations,
              residual)
    return data_models.VoltageSolution(u=u, converged=False,
                                       iterations=iterations,
                                       residual=residual)


def solve_linearized(model, scenario, q_c):
    """Voltage magnitudes v = X[:, C] q_C + v_hat of the linear model."""
    q_c = _check_setpoints(model, q_c)
    return model.x_tilde[:, model.der_index] @ q_c + model.v_hat(scenario)
