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

import voltvar.common.config


def list_opts():
    return [
        ('DEFAULT', voltvar.common.config.run_opts
         + voltvar.common.config.cli_opts),
        ('power_flow', voltvar.common.config.power_flow_opts),
        ('orpf', voltvar.common.config.orpf_opts),
        ('dataset', voltvar.common.config.dataset_opts),
        ('training', voltvar.common.config.training_opts),
        ('control', voltvar.common.config.control_opts),
        ('evaluation', voltvar.common.config.evaluation_opts),
    ]
