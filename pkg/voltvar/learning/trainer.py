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
from oslo_log import log as logging

from voltvar.common import constants
from voltvar.learning import network
from voltvar.learning import optimizer
from voltvar.utils import exceptions
from voltvar.utils import seeding

LOG = logging.getLogger(__name__)

BIAS_LOW = 0.90
BIAS_HIGH = 1.10
INIT_SLOPE = 0.01


def mean_squared_error(phi, v, q):
    return float(np.mean((phi(v) - q) ** 2))


def _initial_parameters(dataset, neurons, rng):
    b = np.linspace(BIAS_LOW, BIAS_HIGH, neurons)
    cumsum = -rng.uniform(0.0, INIT_SLOPE, neurons)
    w = np.diff(cumsum, prepend=0.0)
    beta = np.array([float(np.mean(dataset.q))])
    return {'w': w, 'b': b, 'beta': beta}


def _gradients(params, v, q, q_min, q_max):
    w, b, beta = params['w'], params['b'], params['beta'][0]
    shifted = v[:, None] - b[None, :]
    active = shifted > 0.0
    hidden = np.where(active, shifted, 0.0)
    pre = hidden @ w + beta
    out = np.clip(pre, q_min, q_max)
    residual = out - q
    inside = (pre > q_min) & (pre < q_max)
    g_pre = np.where(inside, 2.0 * residual / v.shape[0], 0.0)
    return {
        'w': hidden.T @ g_pre,
        'b': -w * (active.T @ g_pre),
        'beta': np.array([np.sum(g_pre)]),
    }, float(np.mean(residual ** 2))


def train(dataset, neurons, config, q_min=None, q_max=None):
    """Fit an equilibrium function to a local dataset.

    Full-batch adaptive moment steps on the squared error. After each step
    the biases are re-sorted (weights and moments follow) and the weights
    made feasible again, so the result satisfies the monotonicity
    constraint exactly.
    """
    if neurons is None or neurons <= 0:
        raise exceptions.InvalidParameterError(
            "neuron count must be positive, got {}".format(neurons))
    if len(dataset) == 0:
        raise exceptions.InvalidParameterError(
            "cannot train on an empty dataset (DER {})".format(
                dataset.der_bus))
    config.validate()
    q_min = dataset.q_min if q_min is None else q_min
    q_max = dataset.q_max if q_max is None else q_max

    rng = seeding.rng_for(config.seed,
                          constants.SEED_TRAINING.format(dataset.der_bus))
    params = _initial_parameters(dataset, neurons, rng)
    adam = optimizer.Adam(lr=config.learning_rate, beta1=config.beta1,
                          beta2=config.beta2, epsilon=config.adam_epsilon)
    v, q = dataset.v, dataset.q

    loss = np.nan
    for step in range(config.episodes):
        adam.lr = config.learning_rate_at(step)
        grads, loss = _gradients(params, v, q, q_min, q_max)
        adam.step(params, grads)

        order = np.argsort(params['b'], kind='stable')
        params['b'] = params['b'][order]
        params['w'] = params['w'][order]
        adam.permute(('w', 'b'), order)
        cumsum = np.cumsum(params['w'])
        lower = -np.inf if config.slope_limit is None \
            else -config.slope_limit
        params['w'] = np.diff(np.clip(cumsum, lower, 0.0), prepend=0.0)

        if step % 500 == 0:
            LOG.debug("DER %s step %d: mse %.6e lr %.3e", dataset.der_bus,
                      step, loss, adam.lr)

    phi = network.EquilibriumFunction(
        params['b'], params['w'], params['beta'][0], q_min=q_min,
        q_max=q_max, der_bus=dataset.der_bus)
    phi = network.restore_feasibility(phi, max_slope=config.slope_limit)
    phi.validate()
    LOG.info("Trained DER %s: H=%d mse=%.6e L=%.6g", dataset.der_bus,
             phi.H, mean_squared_error(phi, v, q), phi.lipschitz)
    return phi
