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
from voltvar.utils import exceptions


def _vector(values, dtype=float):
    return np.atleast_1d(np.asarray(values, dtype=dtype)).copy()


class BaseDataModel(object):
    def __repr__(self):
        fields = ", ".join("{}={!r}".format(k, v) for k, v in
                           sorted(self.__dict__.items())
                           if not isinstance(v, np.ndarray))
        return "{}({})".format(self.__class__.__name__, fields)


class FeederSpec(BaseDataModel):
    """Electrical network of a radial feeder, bus 0 is the substation.

    Vectors indexed by bus (shunts, v_min, v_max, nominal loads) have one
    entry per non-substation bus, entry n-1 belongs to bus n. DER vectors
    follow the order of der_buses.
    """

    def __init__(self, bus_count=None, lines=None, shunts=None,
                 der_buses=None, q_min=None, q_max=None, v_min=None,
                 v_max=None, nominal_p=None, nominal_q=None,
                 pv_capacity=None, base=None, name=None):
        self.bus_count = int(bus_count)
        self.lines = [(int(f), int(t), complex(z)) for f, t, z in lines or []]
        n = self.bus_count - 1
        self.shunts = (_vector(shunts, complex) if shunts is not None
                       else np.zeros(n, dtype=complex))
        self.der_buses = [int(b) for b in der_buses or []]
        self.q_min = _vector(q_min)
        self.q_max = _vector(q_max)
        self.v_min = _vector(v_min)
        self.v_max = _vector(v_max)
        self.nominal_p = (_vector(nominal_p) if nominal_p is not None
                          else np.zeros(n))
        self.nominal_q = (_vector(nominal_q) if nominal_q is not None
                          else np.zeros(n))
        self.pv_capacity = (_vector(pv_capacity) if pv_capacity is not None
                            else np.zeros(len(self.der_buses)))
        self.base = dict(base or {})
        self.name = name

    @property
    def n(self):
        return self.bus_count - 1

    @property
    def load_buses(self):
        ders = set(self.der_buses)
        return [b for b in range(1, self.bus_count) if b not in ders]

    def validate(self):
        if self.bus_count < 2:
            raise exceptions.InvalidParameterError(
                "feeder needs a substation and at least one bus")
        n = self.n
        for f, t, z in self.lines:
            if not (0 <= f < self.bus_count and 0 <= t < self.bus_count):
                raise exceptions.InvalidParameterError(
                    "line ({}, {}) references an unknown bus".format(f, t))
            if f == t:
                raise exceptions.InvalidParameterError(
                    "line ({}, {}) is a self loop".format(f, t))
            if abs(z) == 0.0:
                raise exceptions.InvalidParameterError(
                    "line ({}, {}) has zero impedance".format(f, t))
        if not self.der_buses:
            raise exceptions.InvalidParameterError("feeder has no DER bus")
        if len(set(self.der_buses)) != len(self.der_buses):
            raise exceptions.InvalidParameterError("duplicate DER bus")
        if min(self.der_buses) < 1 or max(self.der_buses) > n:
            raise exceptions.InvalidParameterError(
                "DER buses must lie in 1..{}".format(n))
        c = len(self.der_buses)
        for name, vec, size in (('q_min', self.q_min, c),
                                ('q_max', self.q_max, c),
                                ('pv_capacity', self.pv_capacity, c),
                                ('v_min', self.v_min, n),
                                ('v_max', self.v_max, n),
                                ('shunts', self.shunts, n),
                                ('nominal_p', self.nominal_p, n),
                                ('nominal_q', self.nominal_q, n)):
            if vec.shape != (size,):
                raise exceptions.InvalidParameterError(
                    "{} must have {} entries, got {}".format(
                        name, size, vec.shape[0]))
        if np.any(self.q_min > 0.0) or np.any(self.q_max < 0.0):
            raise exceptions.InvalidParameterError(
                "reactive limits must satisfy q_min <= 0 <= q_max")
        if np.any(self.v_min >= 1.0) or np.any(self.v_max <= 1.0):
            raise exceptions.InvalidParameterError(
                "voltage limits must satisfy v_min < 1 < v_max")
        return self


class SensitivityModel(BaseDataModel):
    """Linearized voltage model of a feeder.

    Full matrices keep the original bus order (row n-1 is bus n);
    der_index and load_index select the C and L partitions.
    """

    def __init__(self, feeder=None, y_tilde=None, y_0=None, z_tilde=None,
                 u_hat=None, der_index=None, load_index=None):
        self.feeder = feeder
        self.y_tilde = y_tilde
        self.y_0 = y_0
        self.z_tilde = z_tilde
        self.r_tilde = np.ascontiguousarray(z_tilde.real)
        self.x_tilde = np.ascontiguousarray(z_tilde.imag)
        self.u_hat = u_hat
        self.u_hat_mag = np.abs(u_hat)
        self.der_index = np.asarray(der_index, dtype=int)
        self.load_index = np.asarray(load_index, dtype=int)
        c, l_ = self.der_index, self.load_index
        self.R = self.r_tilde[np.ix_(c, c)]
        self.X = self.x_tilde[np.ix_(c, c)]
        self.R_L = self.r_tilde[np.ix_(c, l_)]
        self.X_L = self.x_tilde[np.ix_(c, l_)]
        self.R_LL = self.r_tilde[np.ix_(l_, l_)]
        self.X_LL = self.x_tilde[np.ix_(l_, l_)]
        self.x_norm = None

    @property
    def n(self):
        return self.z_tilde.shape[0]

    @property
    def c(self):
        return self.der_index.shape[0]

    @property
    def bus_ids(self):
        return np.arange(1, self.n + 1)

    @property
    def der_buses(self):
        return self.der_index + 1

    @property
    def q_min(self):
        return self.feeder.q_min

    @property
    def q_max(self):
        return self.feeder.q_max

    @property
    def v_min(self):
        return self.feeder.v_min

    @property
    def v_max(self):
        return self.feeder.v_max

    def q_full(self, scenario, q_c):
        """Reactive injections of all buses for DER setpoints q_c."""
        q = np.zeros(self.n)
        q[self.der_index] = q_c
        q[self.load_index] = scenario.q_L
        return q

    def v_hat(self, scenario):
        """Voltage offset not controlled by the DERs."""
        return (self.x_tilde[:, self.load_index] @ scenario.q_L
                + self.r_tilde @ scenario.p + self.u_hat_mag)

    def reassemble(self, matrix='x'):
        """Rebuild the [C; L] permuted matrix from its blocks."""
        if matrix == 'x':
            top = np.hstack([self.X, self.X_L])
            bottom = np.hstack([self.X_L.T, self.X_LL])
        else:
            top = np.hstack([self.R, self.R_L])
            bottom = np.hstack([self.R_L.T, self.R_LL])
        return np.vstack([top, bottom])

    @property
    def permutation(self):
        return np.concatenate([self.der_index, self.load_index])


class Scenario(BaseDataModel):
    """Active injections of all buses and reactive injections of L."""

    def __init__(self, p=None, q_L=None, index=0, timestamp=None):
        self.p = _vector(p)
        self.q_L = _vector(q_L) if q_L is not None else np.zeros(0)
        self.index = int(index)
        self.timestamp = timestamp

    def validate(self, model):
        if self.p.shape != (model.n,):
            raise exceptions.InvalidParameterError(
                "scenario {} has {} active injections, feeder has {} "
                "buses".format(self.index, self.p.shape[0], model.n))
        if self.q_L.shape != (model.load_index.shape[0],):
            raise exceptions.InvalidParameterError(
                "scenario {} has {} reactive loads, feeder has {}".format(
                    self.index, self.q_L.shape[0],
                    model.load_index.shape[0]))
        if not (np.all(np.isfinite(self.p)) and
                np.all(np.isfinite(self.q_L))):
            raise exceptions.InvalidParameterError(
                "scenario {} has non-finite injections".format(self.index))
        return self

    @classmethod
    def zero(cls, model, index=0):
        return cls(p=np.zeros(model.n),
                   q_L=np.zeros(model.load_index.shape[0]), index=index)


class VoltageSolution(BaseDataModel):
    def __init__(self, u=None, converged=False, iterations=0,
                 residual=np.inf):
        self.u = np.asarray(u, dtype=complex)
        self.v = np.abs(self.u)
        self.converged = bool(converged)
        self.iterations = int(iterations)
        self.residual = float(residual)


class ORPFInstance(BaseDataModel):
    def __init__(self, model=None, scenario=None, alpha=0.5, q_min=None,
                 q_max=None, v_min=None, v_max=None):
        self.model = model
        self.scenario = scenario
        self.alpha = float(alpha)
        self.q_min = _vector(model.q_min if q_min is None else q_min)
        self.q_max = _vector(model.q_max if q_max is None else q_max)
        self.v_min = _vector(model.v_min if v_min is None else v_min)
        self.v_max = _vector(model.v_max if v_max is None else v_max)

    def validate(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise exceptions.InvalidParameterError(
                "alpha must lie in [0, 1], got {}".format(self.alpha))
        if np.any(self.q_min > self.q_max):
            raise exceptions.InvalidParameterError("empty reactive box")
        self.scenario.validate(self.model)
        return self


class ORPFSolution(BaseDataModel):
    def __init__(self, q_star=None, v_star=None, objective=np.nan,
                 status=constants.STATUS_OPTIMAL, kkt_residual=np.nan,
                 iterations=0, violation=0.0, scenario_index=0,
                 duals=None):
        self.q_star = _vector(q_star)
        self.v_star = _vector(v_star)
        self.objective = float(objective)
        self.status = status
        self.kkt_residual = float(kkt_residual)
        self.iterations = int(iterations)
        self.violation = float(violation)
        self.scenario_index = int(scenario_index)
        self.duals = None if duals is None else _vector(duals)

    @property
    def feasible(self):
        return self.status != constants.STATUS_INFEASIBLE

    @property
    def optimal(self):
        return self.status == constants.STATUS_OPTIMAL


class LocalDataset(BaseDataModel):
    """(v, q) samples of one DER, real points plus pseudo points."""

    def __init__(self, der_bus=None, q_min=None, q_max=None, v=None, q=None,
                 kinds=None, scenario_ids=None):
        self.der_bus = int(der_bus)
        self.q_min = float(q_min)
        self.q_max = float(q_max)
        self.v = _vector(v if v is not None else [])
        self.q = _vector(q if q is not None else [])
        self.kinds = np.asarray(kinds if kinds is not None else [],
                                dtype=object)
        self.scenario_ids = np.asarray(
            scenario_ids if scenario_ids is not None else [], dtype=int)

    def __len__(self):
        return self.v.shape[0]

    @property
    def points(self):
        return list(zip(self.v.tolist(), self.q.tolist()))

    def mask(self, kind):
        return self.kinds == kind

    @property
    def real_mask(self):
        return self.mask(constants.POINT_REAL)

    @property
    def counts(self):
        return (int(np.sum(self.mask(constants.POINT_REAL))),
                int(np.sum(self.mask(constants.POINT_PSEUDO_LOW))),
                int(np.sum(self.mask(constants.POINT_PSEUDO_HIGH))))

    @property
    def provenance(self):
        return self.scenario_ids[self.real_mask]

    def extended(self, v, q, kind, scenario_ids=None):
        v = _vector(v)
        if scenario_ids is None:
            scenario_ids = np.full(v.shape[0], constants.NO_SCENARIO)
        return LocalDataset(
            der_bus=self.der_bus, q_min=self.q_min, q_max=self.q_max,
            v=np.concatenate([self.v, v]),
            q=np.concatenate([self.q, _vector(q)]),
            kinds=np.concatenate([self.kinds,
                                  np.full(v.shape[0], kind, dtype=object)]),
            scenario_ids=np.concatenate([self.scenario_ids,
                                         np.asarray(scenario_ids, int)]))

    def validate(self, v_min=None, v_max=None, tol=1e-9):
        if not (len(self.q) == len(self.v) == len(self.kinds) ==
                len(self.scenario_ids)):
            raise exceptions.InvalidParameterError(
                "dataset columns have different lengths")
        if np.any(self.q < self.q_min - tol) or \
                np.any(self.q > self.q_max + tol):
            raise exceptions.InvalidParameterError(
                "dataset of DER {} has q outside its box".format(
                    self.der_bus))
        unknown = set(self.kinds.tolist()) - set(
            constants.SUPPORTED_POINT_KINDS)
        if unknown:
            raise exceptions.InvalidParameterError(
                "unknown point kinds {}".format(sorted(unknown)))
        low = self.mask(constants.POINT_PSEUDO_LOW)
        high = self.mask(constants.POINT_PSEUDO_HIGH)
        if np.any(self.q[low] != self.q_max) or \
                np.any(self.q[high] != self.q_min):
            raise exceptions.InvalidParameterError(
                "pseudo points must sit at the saturated injections")
        if v_min is not None and np.any(self.v[low] > v_min + tol):
            raise exceptions.InvalidParameterError(
                "pseudo_low points above v_min")
        if v_max is not None and np.any(self.v[high] < v_max - tol):
            raise exceptions.InvalidParameterError(
                "pseudo_high points below v_max")
        return self


class TrainConfig(BaseDataModel):
    def __init__(self, episodes=2000, learning_rate=0.01, decay_rate=0.5,
                 decay_steps=500, beta1=0.9, beta2=0.999, adam_epsilon=1e-8,
                 seed=0, slope_limit=None):
        self.episodes = int(episodes)
        self.learning_rate = float(learning_rate)
        self.decay_rate = float(decay_rate)
        self.decay_steps = int(decay_steps)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.adam_epsilon = float(adam_epsilon)
        self.seed = int(seed)
        self.slope_limit = None if slope_limit is None else float(slope_limit)

    def learning_rate_at(self, step):
        return self.learning_rate * self.decay_rate ** (
            step // self.decay_steps)

    def validate(self):
        if self.learning_rate <= 0.0 or self.adam_epsilon <= 0.0:
            raise exceptions.InvalidParameterError(
                "learning rate and adam epsilon must be positive")
        if not 0.0 < self.decay_rate <= 1.0:
            raise exceptions.InvalidParameterError(
                "decay rate must lie in (0, 1]")
        if self.episodes < 1 or self.decay_steps < 1:
            raise exceptions.InvalidParameterError(
                "episodes and decay steps must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise exceptions.InvalidParameterError(
                "moment decay rates must lie in [0, 1)")
        if self.slope_limit is not None and self.slope_limit <= 0.0:
            raise exceptions.InvalidParameterError(
                "slope limit must be positive")
        return self

    @classmethod
    def from_conf(cls, conf, seed=0, slope_limit=None):
        group = conf.training
        return cls(episodes=group.episodes,
                   learning_rate=group.learning_rate,
                   decay_rate=group.decay_rate,
                   decay_steps=group.decay_steps, beta1=group.beta1,
                   beta2=group.beta2, adam_epsilon=group.adam_epsilon,
                   seed=seed, slope_limit=slope_limit)


class ControllerConfig(BaseDataModel):
    def __init__(self, epsilon=1.0, iterations=120,
                 flow_model=constants.FLOW_LINEARIZED, noise=0.0,
                 kind=constants.CONTROLLER_INCREMENTAL, seed=0,
                 convergence_tolerance=1e-8, divergence_threshold=1e-3):
        self.epsilon = float(epsilon)
        self.iterations = int(iterations)
        self.flow_model = flow_model
        self.noise = float(noise)
        self.kind = kind
        self.seed = int(seed)
        self.convergence_tolerance = float(convergence_tolerance)
        self.divergence_threshold = float(divergence_threshold)

    def validate(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise exceptions.InvalidParameterError(
                "epsilon must lie in (0, 1], got {}".format(self.epsilon))
        if self.iterations < 1:
            raise exceptions.InvalidParameterError(
                "at least one iteration per scenario is required")
        if self.flow_model not in constants.SUPPORTED_FLOW_MODELS:
            raise exceptions.InvalidParameterError(
                "unknown flow model {}".format(self.flow_model))
        if self.kind not in constants.SUPPORTED_CONTROLLERS:
            raise exceptions.InvalidParameterError(
                "unknown controller kind {}".format(self.kind))
        if self.noise < 0.0:
            raise exceptions.InvalidParameterError(
                "noise level must be nonnegative")
        return self


class SimulationTrace(BaseDataModel):
    """Closed loop history of one scenario.

    Row t holds q(t) and v(t); residual[t] = ||q(t+1) - q(t)||_inf.
    """

    def __init__(self, q_history=None, v_history=None, residual=None,
                 converged=False, verdict=constants.VERDICT_NOT_CONVERGED,
                 q_fixed=None, v_fixed=None, scenario_index=0,
                 steps=0, ac_failures=0, next_q=None):
        self.q_history = np.asarray(q_history, dtype=float)
        self.v_history = np.asarray(v_history, dtype=float)
        self.residual = np.asarray(residual, dtype=float)
        self.converged = bool(converged)
        self.verdict = verdict
        self.q_fixed = None if q_fixed is None else _vector(q_fixed)
        self.v_fixed = None if v_fixed is None else _vector(v_fixed)
        self.scenario_index = int(scenario_index)
        self.steps = int(steps)
        self.ac_failures = int(ac_failures)
        # state handed to the next scenario, q(T)
        self.next_q = (self.q_history[-1].copy() if next_q is None
                       else _vector(next_q))

    @property
    def final_q(self):
        return self.q_history[-1]
