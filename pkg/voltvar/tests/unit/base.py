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
from oslo_config import cfg
from oslo_config import fixture as oslo_fixture
from oslotest import base

# pylint: disable=unused-import
from voltvar.common import config  # noqa


class TestCase(base.BaseTestCase):
    def setUp(self):
        super(TestCase, self).setUp()
        self.conf = self.useFixture(oslo_fixture.Config(cfg.CONF))

    def assertArrayAlmostEqual(self, expected, actual, atol=1e-9):
        np.testing.assert_allclose(actual, expected, rtol=0.0, atol=atol)
