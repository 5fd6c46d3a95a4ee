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


from oslo_log import log as logging

from voltvar.common import constants
from voltvar.control import droop
from voltvar.control.drivers import base
from voltvar.utils import exceptions

LOG = logging.getLogger(__name__)


def _limits(model):
    idx = model.der_index
    return zip(model.q_min, model.q_max, model.v_min[idx], model.v_max[idx])


class StandardDroopController(base.VoltVarController):
    kind = constants.CONTROLLER_DROOP_STANDARD

    def __init__(self, model=None, **kwargs):
        super(StandardDroopController, self).__init__(model=model, **kwargs)
        self.rules = [droop.standard_rule(q_lo, q_hi, v_lo, v_hi)
                      for q_lo, q_hi, v_lo, v_hi in _limits(model)]

    def step(self, q, v_measured):
        return self.target(v_measured)


class OptimizedDroopController(base.VoltVarController):
    kind = constants.CONTROLLER_DROOP_OPTIMIZED

    def __init__(self, model=None, droop_params=None, **kwargs):
        super(OptimizedDroopController, self).__init__(model=model, **kwargs)
        if not droop_params or len(droop_params) != model.c:
            raise exceptions.MissingArtifactsError(
                ["optimized droop parameters for all DERs"])
        self.rules = [droop.optimized_rule(q_lo, q_hi, v_lo, v_hi, params)
                      for (q_lo, q_hi, v_lo, v_hi), params in
                      zip(_limits(model), droop_params)]

    def step(self, q, v_measured):
        return self.target(v_measured)
