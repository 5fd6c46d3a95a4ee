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

"""Piecewise linear droop curves, the baselines of the learned rules."""

import functools

import numpy as np
from oslo_log import log as logging

from voltvar.utils import exceptions

LOG = logging.getLogger(__name__)

# deadband candidates per half band; the grid includes the band midpoint
DEFAULT_HALF_RESOLUTION = 20


class DroopParams(object):
    def __init__(self, der_bus, vbar_min, vbar_max, loss=np.nan):
        self.der_bus = int(der_bus)
        self.vbar_min = float(vbar_min)
        self.vbar_max = float(vbar_max)
        self.loss = float(loss)

    def __repr__(self):
        return "DroopParams(der_bus={}, vbar_min={}, vbar_max={})".format(
            self.der_bus, self.vbar_min, self.vbar_max)


def droop_standard(v, q_min, q_max, v_min, v_max):
    """Linear droop from q_max at v_min down to q_min at v_max."""
    if not v_min < v_max:
        raise exceptions.InvalidParameterError(
            "droop needs v_min < v_max, got {} and {}".format(v_min, v_max))
    slope = (q_max - q_min) / (v_max - v_min)
    return np.clip(q_max - slope * (np.asarray(v, dtype=float) - v_min),
                   q_min, q_max)


def check_deadband(v_min, v_max, vbar_min, vbar_max):
    if not v_min < vbar_min <= vbar_max < v_max:
        raise exceptions.InvalidParameterError(
            "deadband must satisfy v_min < vbar_min <= vbar_max < v_max, "
            "got {} {} {} {}".format(v_min, vbar_min, vbar_max, v_max))


def droop_optimized(v, q_min, q_max, v_min, v_max, vbar_min, vbar_max):
    """Droop with a deadband: saturation, ramp, zero, ramp, saturation."""
    check_deadband(v_min, v_max, vbar_min, vbar_max)
    v = np.asarray(v, dtype=float)
    low = q_max * (vbar_min - v) / (vbar_min - v_min)
    high = q_min * (v - vbar_max) / (v_max - vbar_max)
    q = np.where(v < vbar_min, low, np.where(v > vbar_max, high, 0.0))
    return np.clip(q, q_min, q_max)


def standard_rule(q_min, q_max, v_min, v_max):
    return functools.partial(droop_standard, q_min=q_min, q_max=q_max,
                             v_min=v_min, v_max=v_max)


def optimized_rule(q_min, q_max, v_min, v_max, params):
    return functools.partial(droop_optimized, q_min=q_min, q_max=q_max,
                             v_min=v_min, v_max=v_max,
                             vbar_min=params.vbar_min,
                             vbar_max=params.vbar_max)


def deadband_grid(v_min, v_max, half_resolution=DEFAULT_HALF_RESOLUTION):
    """Interior candidates of (v_min, v_max), midpoint included."""
    return np.linspace(v_min, v_max, 2 * half_resolution + 1)[1:-1]


def _optimize_one(dataset, v_min, v_max, half_resolution):
    mask = dataset.real_mask
    v = dataset.v[mask]
    q = dataset.q[mask]
    grid = deadband_grid(v_min, v_max, half_resolution)
    best = None
    for i, vbar_min in enumerate(grid):
        # candidates at or above vbar_min, ascending
        vbar_maxes = grid[i:]
        low = dataset.q_max * (vbar_min - v) / (vbar_min - v_min)
        highs = (dataset.q_min * (v[None, :] - vbar_maxes[:, None])
                 / (v_max - vbar_maxes[:, None]))
        curves = np.where(v[None, :] < vbar_min, low[None, :],
                          np.where(v[None, :] > vbar_maxes[:, None],
                                   highs, 0.0))
        curves = np.clip(curves, dataset.q_min, dataset.q_max)
        losses = np.mean((q[None, :] - curves) ** 2, axis=1)
        j = int(np.argmin(losses))
        # strict improvement keeps the smallest pair on ties
        if best is None or losses[j] < best[0]:
            best = (float(losses[j]), vbar_min, vbar_maxes[j])
    return DroopParams(dataset.der_bus, best[1], best[2], loss=best[0])


def optimize_droop_params(datasets, v_min, v_max,
                          half_resolution=DEFAULT_HALF_RESOLUTION):
    """Deadband per DER minimizing the squared error on its real points.

    :param v_min: per-DER lower voltage limits, same order as datasets
    :param v_max: per-DER upper voltage limits
    """
    if not datasets:
        raise exceptions.InvalidParameterError("no datasets given")
    params = []
    for dataset, lo, hi in zip(datasets, np.broadcast_to(v_min, len(datasets)),
                               np.broadcast_to(v_max, len(datasets))):
        if not np.any(dataset.real_mask):
            raise exceptions.InvalidParameterError(
                "dataset of DER {} has no real points".format(
                    dataset.der_bus))
        result = _optimize_one(dataset, float(lo), float(hi),
                               half_resolution)
        LOG.debug("Optimized droop for DER %d: deadband [%.4f, %.4f] "
                  "loss %.6e", result.der_bus, result.vbar_min,
                  result.vbar_max, result.loss)
        params.append(result)
    return params
