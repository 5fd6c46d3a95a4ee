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

"""Named sub-seeds derived from the single top-level seed."""

import zlib

import numpy as np


def sub_seed(seed, name):
    return np.random.SeedSequence([int(seed), zlib.crc32(name.encode('utf-8'))])


def rng_for(seed, name):
    """Independent generator for the stream called name."""
    return np.random.default_rng(sub_seed(seed, name))
