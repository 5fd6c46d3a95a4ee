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


import abc

import numpy as np


class VoltVarController(object, metaclass=abc.ABCMeta):
    """Local controllers of all DERs, updated synchronously.

    Drivers are loaded through stevedore and receive the same keyword
    arguments; each picks what it needs.
    """

    kind = None
    incremental = False

    def __init__(self, model=None, **kwargs):
        self.model = model
        self.rules = []

    def target(self, v_measured):
        """Per-DER rule output at the measured local voltages."""
        return np.array([float(rule(v)) for rule, v in
                         zip(self.rules, v_measured)])

    @abc.abstractmethod
    def step(self, q, v_measured):
        """Return the next reactive setpoints."""
