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
from stevedore import driver

from voltvar.common import constants
from voltvar.utils import exceptions

LOG = logging.getLogger(__name__)
_CONTROLLER_DRIVERS = {}


def get_controller_class(kind):
    if kind not in _CONTROLLER_DRIVERS:
        if kind not in constants.SUPPORTED_CONTROLLERS:
            raise exceptions.InvalidParameterError(
                "unknown controller kind {}".format(kind))
        _CONTROLLER_DRIVERS[kind] = driver.DriverManager(
            namespace=constants.CONTROLLER_NAMESPACE,
            name=kind,
            invoke_on_load=False
        ).driver
    return _CONTROLLER_DRIVERS[kind]


def get_controller(kind, model, **kwargs):
    """Instantiate the controller driver registered under kind."""
    LOG.debug("Loading controller driver %s", kind)
    return get_controller_class(kind)(model=model, **kwargs)
