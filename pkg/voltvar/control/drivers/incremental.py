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


from voltvar.common import constants
from voltvar.control.drivers import base
from voltvar.utils import exceptions


class IncrementalController(base.VoltVarController):
    """q+ = q + epsilon (phi(v) - q) with learned equilibrium functions."""

    kind = constants.CONTROLLER_INCREMENTAL
    incremental = True

    def __init__(self, model=None, functions=None, epsilon=1.0, **kwargs):
        super(IncrementalController, self).__init__(model=model, **kwargs)
        if not functions:
            raise exceptions.MissingArtifactsError(
                ["equilibrium functions for the {} controller".format(
                    self.kind)])
        if not 0.0 < epsilon <= 1.0:
            raise exceptions.InvalidParameterError(
                "epsilon must lie in (0, 1], got {}".format(epsilon))
        self.rules = list(functions)
        self.epsilon = float(epsilon)

    def step(self, q, v_measured):
        return q + self.epsilon * (self.target(v_measured) - q)


class NonIncrementalController(IncrementalController):
    """q+ = phi(v), the incremental rule at epsilon = 1."""

    kind = constants.CONTROLLER_NON_INCREMENTAL
    incremental = False

    def __init__(self, model=None, functions=None, **kwargs):
        kwargs.pop('epsilon', None)
        super(NonIncrementalController, self).__init__(
            model=model, functions=functions, epsilon=1.0, **kwargs)

    def step(self, q, v_measured):
        return self.target(v_measured)
