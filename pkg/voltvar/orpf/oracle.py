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

"""Exhaustive grid evaluation of the ORPF cost, a reference for the solver."""

import itertools

import numpy as np
from oslo_log import log as logging

from voltvar.common import constants
from voltvar.common import data_models
from voltvar.utils import exceptions

LOG = logging.getLogger(__name__)

MAX_DERS = 3
CHUNK = 50000
ZOOM = 3.0


def _costs(instance, points):
    """Vectorized cost and voltage feasibility of candidate rows."""
    model = instance.model
    scenario = instance.scenario
    A = model.x_tilde[:, model.der_index]
    v = points @ A.T + model.v_hat(scenario)
    feasible = np.all((v >= instance.v_min) & (v <= instance.v_max), axis=1)

    r = model.r_tilde
    c, l_ = model.der_index, model.load_index
    q_l = scenario.q_L
    const = q_l @ model.R_LL @ q_l + scenario.p @ r @ scenario.p
    losses = (np.einsum('ij,jk,ik->i', points, model.R, points)
              + 2.0 * points @ (r[np.ix_(c, l_)] @ q_l) + const)
    cost = (instance.alpha * np.linalg.norm(v - 1.0, axis=1)
            + (1.0 - instance.alpha) * losses)
    return cost, feasible


def _best_on_grid(instance, lower, upper, resolution):
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(lower, upper)]
    best_cost, best_q = np.inf, None
    grid = itertools.product(*axes)
    while True:
        chunk = np.array(list(itertools.islice(grid, CHUNK)))
        if chunk.size == 0:
            break
        cost, feasible = _costs(instance, chunk)
        if not np.any(feasible):
            continue
        cost = np.where(feasible, cost, np.inf)
        idx = int(np.argmin(cost))
        if cost[idx] < best_cost:
            best_cost, best_q = float(cost[idx]), chunk[idx]
    return best_cost, best_q


def grid_search_oracle(instance, resolution, refine=0):
    """Best voltage-feasible point of a box grid.

    :param resolution: grid points per axis
    :param refine: zoom rounds, each re-gridding a window of a few
                   spacings around the incumbent
    """
    instance.validate()
    model = instance.model
    if model.c > MAX_DERS:
        raise exceptions.InvalidParameterError(
            "grid search oracle supports at most {} DERs, got {}".format(
                MAX_DERS, model.c))
    if resolution < 2:
        raise exceptions.InvalidParameterError("resolution must be >= 2")

    lower, upper = instance.q_min.copy(), instance.q_max.copy()
    best_cost, best_q = _best_on_grid(instance, lower, upper, resolution)
    if best_q is None:
        LOG.debug("Grid search found no voltage-feasible point")
        return data_models.ORPFSolution(
            q_star=np.full(model.c, np.nan), v_star=np.full(model.n, np.nan),
            status=constants.STATUS_INFEASIBLE,
            scenario_index=instance.scenario.index)

    for _ in range(refine):
        spacing = (upper - lower) / (resolution - 1)
        lower = np.maximum(best_q - ZOOM * spacing, instance.q_min)
        upper = np.minimum(best_q + ZOOM * spacing, instance.q_max)
        cost, q = _best_on_grid(instance, lower, upper, resolution)
        if q is not None and cost <= best_cost:
            best_cost, best_q = cost, q

    v_star = (model.x_tilde[:, model.der_index] @ best_q
              + model.v_hat(instance.scenario))
    return data_models.ORPFSolution(
        q_star=best_q, v_star=v_star, objective=best_cost,
        status=constants.STATUS_OPTIMAL,
        scenario_index=instance.scenario.index)
