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

import futurist
import numpy as np
from oslo_log import log as logging

from voltvar.common import constants
from voltvar.common import data_models
from voltvar.grid import power_flow
from voltvar.orpf import solver
from voltvar.utils import exceptions

LOG = logging.getLogger(__name__)


class SkipRecord(object):
    def __init__(self, scenario_id, status, violation):
        self.scenario_id = int(scenario_id)
        self.status = status
        self.violation = float(violation)


def solve_batch(model, scenarios, alpha, executor=None):
    """ORPF solutions of all scenarios, ordered like the scenarios."""
    executor = executor or futurist.SynchronousExecutor()
    futures = [executor.submit(
        solver.solve_orpf,
        data_models.ORPFInstance(model=model, scenario=scenario,
                                 alpha=alpha))
        for scenario in scenarios]
    return [future.result() for future in futures]


def _recorded_voltages(model, scenario, solution, voltage_model):
    if voltage_model == constants.FLOW_LINEARIZED:
        return solution.v_star
    ac = power_flow.solve_ac(model, scenario, solution.q_star)
    if not ac.converged:
        LOG.warning("AC power flow failed for scenario %d, recording the "
                    "linearized optimal voltages", scenario.index)
        return solution.v_star
    return ac.v


def build_dataset(model, scenarios, alpha, executor=None,
                  voltage_model=constants.FLOW_LINEARIZED, solutions=None):
    """Split ORPF minimizers into per-DER (v, q) datasets.

    :return: (datasets, skip_log, solutions); datasets follow the DER
             order of the model, skip_log lists the infeasible
             scenarios and those stopped at the iteration limit
    """
    if solutions is None:
        solutions = solve_batch(model, scenarios, alpha, executor=executor)

    skip_log = []
    v_rows, q_rows, ids = [], [], []
    for scenario, solution in zip(scenarios, solutions):
        if not solution.optimal:
            LOG.warning("Skipping scenario %d with ORPF status %s (minimum "
                        "voltage violation %.3e, residual %.3e)",
                        scenario.index, solution.status,
                        solution.violation, solution.kkt_residual)
            skip_log.append(SkipRecord(scenario.index, solution.status,
                                       solution.violation))
            continue
        v = _recorded_voltages(model, scenario, solution, voltage_model)
        v_rows.append(v[model.der_index])
        q_rows.append(solution.q_star)
        ids.append(scenario.index)

    if not ids:
        raise exceptions.EmptyDatasetError(count=len(scenarios))

    v_rows = np.vstack(v_rows)
    q_rows = np.vstack(q_rows)
    datasets = []
    for pos, bus in enumerate(model.der_buses):
        datasets.append(data_models.LocalDataset(
            der_bus=bus, q_min=model.q_min[pos], q_max=model.q_max[pos],
            v=v_rows[:, pos], q=q_rows[:, pos],
            kinds=[constants.POINT_REAL] * len(ids), scenario_ids=ids))
    LOG.info("Built datasets for %d DERs from %d of %d scenarios "
             "(%d skipped)", model.c, len(ids), len(scenarios),
             len(skip_log))
    return datasets, skip_log, solutions


def default_pseudo_ranges(v_min, v_max, width):
    return (v_min - width, v_min), (v_max, v_max + width)


def add_pseudo_points(dataset, low_count, high_count, v_low_range,
                      v_high_range, v_min, v_max,
                      spacing=constants.PSEUDO_SPACING_UNIFORM, rng=None):
    """Append saturated pseudo points beyond the voltage limits.

    low_count points (v, q_max) are placed in v_low_range, which must lie
    below v_min, and high_count points (v, q_min) in v_high_range, above
    v_max. Random spacing draws from rng, a fresh unseeded generator when
    none is given.
    """
    low_lo, low_hi = v_low_range
    high_lo, high_hi = v_high_range
    if low_lo > low_hi or low_hi > v_min:
        raise exceptions.InvalidParameterError(
            "low pseudo range [{}, {}] must lie below v_min {}".format(
                low_lo, low_hi, v_min))
    if high_lo > high_hi or high_lo < v_max:
        raise exceptions.InvalidParameterError(
            "high pseudo range [{}, {}] must lie above v_max {}".format(
                high_lo, high_hi, v_max))
    if spacing not in constants.SUPPORTED_PSEUDO_SPACINGS:
        raise exceptions.InvalidParameterError(
            "unknown pseudo point spacing {}".format(spacing))
    if spacing == constants.PSEUDO_SPACING_RANDOM and rng is None:
        rng = np.random.default_rng()

    def _voltages(lo, hi, count):
        if spacing == constants.PSEUDO_SPACING_UNIFORM:
            return np.linspace(lo, hi, count)
        return np.sort(rng.uniform(lo, hi, count))

    result = dataset
    if low_count:
        result = result.extended(_voltages(low_lo, low_hi, low_count),
                                 np.full(low_count, dataset.q_max),
                                 constants.POINT_PSEUDO_LOW)
    if high_count:
        result = result.extended(_voltages(high_lo, high_hi, high_count),
                                 np.full(high_count, dataset.q_min),
                                 constants.POINT_PSEUDO_HIGH)
    return result


def monotone_inconsistency(dataset, real_only=True):
    """Fraction of point pairs ordered increasingly in both v and q."""
    mask = dataset.real_mask if real_only else np.ones(len(dataset), bool)
    v = dataset.v[mask]
    q = dataset.q[mask]
    k = v.shape[0]
    if k < 2:
        return 0.0
    violating = (v[:, None] < v[None, :]) & (q[:, None] < q[None, :])
    return float(np.count_nonzero(violating)) / (k * (k - 1) / 2.0)
