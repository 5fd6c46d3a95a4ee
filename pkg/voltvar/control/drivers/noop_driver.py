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
from voltvar.control.drivers import base


class NoopController(base.VoltVarController):
    """No control action, every DER stays at zero."""

    kind = constants.CONTROLLER_NONE

    def __init__(self, model=None, **kwargs):
        super(NoopController, self).__init__(model=model, **kwargs)
        self.rules = [lambda v: 0.0] * model.c

    def step(self, q, v_measured):
        return np.zeros_like(q)
