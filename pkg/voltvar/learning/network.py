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
Clamped monotone ReLU networks mapping local voltage to reactive power.

    N(v)   = sum_h w_h max(0, v - b_h) + beta
    phi(v) = min(max(N(v), q_min), q_max)

With ascending biases, N is nonincreasing exactly when every cumulative
weight sum is nonpositive; the slope of N between b_J and b_(J+1) is the
J-th cumulative sum, so the Lipschitz constant is the largest magnitude
among them.
"""

import numpy as np

from voltvar.common import constants
from voltvar.utils import exceptions

# rounding slack of cumulative sums rebuilt from differenced weights
CUMSUM_TOLERANCE = 1e-12


class EquilibriumFunction(object):

    def __init__(self, b, w, beta, q_min=-np.inf, q_max=np.inf,
                 der_bus=None):
        self.b = np.atleast_1d(np.asarray(b, dtype=float)).copy()
        self.w = np.atleast_1d(np.asarray(w, dtype=float)).copy()
        self.beta = float(beta)
        self.q_min = float(q_min)
        self.q_max = float(q_max)
        self.der_bus = der_bus
        self.lipschitz = lipschitz_constant(self)

    @property
    def H(self):
        return self.b.shape[0]

    @property
    def cumulative_weights(self):
        return np.cumsum(self.w)

    def pre_activation(self, v):
        v = np.asarray(v, dtype=float)
        hidden = np.maximum(0.0, v[..., None] - self.b)
        return hidden @ self.w + self.beta

    def __call__(self, v):
        return np.clip(self.pre_activation(v), self.q_min, self.q_max)

    def validate(self):
        """Raise InvalidEquilibriumFunctionError on a broken invariant."""
        def _fail(reason):
            raise exceptions.InvalidEquilibriumFunctionError(reason=reason)

        if self.H < 1 or self.w.shape != self.b.shape:
            _fail("need H >= 1 biases and as many weights")
        if not (np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.w))
                and np.isfinite(self.beta)):
            _fail("non-finite parameters")
        if np.any(np.diff(self.b) < 0.0):
            _fail("biases are not sorted ascending")
        if np.any(self.cumulative_weights > CUMSUM_TOLERANCE):
            _fail("a cumulative weight sum is positive")
        if self.q_min > self.q_max or self.q_min > 0.0 or self.q_max < 0.0:
            _fail("reactive box must satisfy q_min <= 0 <= q_max")
        if abs(self.lipschitz - lipschitz_constant(self)) > 1e-12:
            _fail("cached Lipschitz constant is stale")
        return self

    def to_dict(self):
        return {
            'schema_version': constants.FUNCTION_SCHEMA_VERSION,
            'der_bus': self.der_bus,
            'H': self.H,
            'b': self.b.tolist(),
            'w': self.w.tolist(),
            'beta': self.beta,
            'q_min': self.q_min,
            'q_max': self.q_max,
            'lipschitz': self.lipschitz,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            if data['schema_version'] != constants.FUNCTION_SCHEMA_VERSION:
                raise exceptions.InvalidEquilibriumFunctionError(
                    reason="unsupported schema version {}".format(
                        data['schema_version']))
            phi = cls(b=data['b'], w=data['w'], beta=data['beta'],
                      q_min=data['q_min'], q_max=data['q_max'],
                      der_bus=data.get('der_bus'))
            if int(data['H']) != phi.H:
                raise exceptions.InvalidEquilibriumFunctionError(
                    reason="H does not match the parameter count")
            if abs(float(data['lipschitz']) - phi.lipschitz) > 1e-9:
                raise exceptions.InvalidEquilibriumFunctionError(
                    reason="stored Lipschitz constant is inconsistent")
        except (KeyError, TypeError, ValueError) as err:
            raise exceptions.InvalidEquilibriumFunctionError(reason=err)
        return phi.validate()


def evaluate(phi, v):
    return phi(v)


def lipschitz_constant(phi):
    """max_J |w_1 + ... + w_J|."""
    if phi.w.size == 0:
        return 0.0
    return float(np.max(np.abs(np.cumsum(phi.w))))


def restore_feasibility(phi, max_slope=None):
    """Clip cumulative weight sums to [-max_slope, 0] and re-difference.

    Already feasible weights come back unchanged. This restores
    monotonicity but is not the Euclidean projection onto it.
    """
    cumsum = np.cumsum(phi.w)
    upper_ok = np.all(cumsum <= 0.0)
    lower_ok = max_slope is None or np.all(cumsum >= -max_slope)
    if upper_ok and lower_ok:
        w = phi.w
    else:
        lower = -np.inf if max_slope is None else -max_slope
        clipped = np.clip(cumsum, lower, 0.0)
        w = np.diff(clipped, prepend=0.0)
    return EquilibriumFunction(phi.b, w, phi.beta, q_min=phi.q_min,
                               q_max=phi.q_max, der_bus=phi.der_bus)


def construct_interpolant(g_samples, x_low, x_high, q_min=-np.inf,
                          q_max=np.inf):
    """Network interpolating H+1 equispaced samples of a nonincreasing g.

    beta = g(x_low), b_h = x_low + (h-1) s and the cumulative weights are
    the secant slopes, so N matches g at every sample point.
    """
    g = np.asarray(g_samples, dtype=float)
    if g.ndim != 1 or g.shape[0] < 2:
        raise exceptions.InvalidParameterError(
            "need at least two samples")
    if not x_high > x_low:
        raise exceptions.InvalidParameterError("empty sample interval")
    if np.any(np.diff(g) > 0.0):
        raise exceptions.InvalidParameterError(
            "samples must be nonincreasing")
    h = g.shape[0] - 1
    step = (x_high - x_low) / h
    b = x_low + step * np.arange(h)
    slopes = np.diff(g) / step
    w = np.diff(slopes, prepend=0.0)
    return EquilibriumFunction(b, w, g[0], q_min=q_min, q_max=q_max)
