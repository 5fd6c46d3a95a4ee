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

import contextlib
import os

from oslo_config import cfg
from oslo_utils import excutils
from oslo_utils import fileutils

from voltvar.common import constants

_RUN_DIRECTORIES = {}


def format_value(value):
    """Short stable text for alphas and noise levels in file names."""
    return '{:.4g}'.format(float(value))


class RunDirectory(object):
    """Layout of one experiment's output directory."""

    def __init__(self, root):
        self.root = os.path.abspath(root)

    def path(self, *parts):
        return os.path.join(self.root, *parts)

    def alpha_dir(self, alpha):
        return self.path(constants.DIR_ALPHA.format(format_value(alpha)))

    def alpha_path(self, alpha, *parts):
        return os.path.join(self.alpha_dir(alpha), *parts)

    def configuration_name(self, kind, noise):
        return '{}_noise_{}'.format(kind, format_value(noise))

    def ensure(self, *parts):
        """Create (if needed) and return a directory below the root."""
        directory = self.path(*parts)
        fileutils.ensure_tree(directory)
        return directory


def get_run_directory(root=None):
    root = os.path.abspath(root or cfg.CONF.out)
    if root not in _RUN_DIRECTORIES:
        _RUN_DIRECTORIES[root] = RunDirectory(root)
    return _RUN_DIRECTORIES[root]


@contextlib.contextmanager
def atomic_write(path, mode='w'):
    """Write to a sibling temporary file and rename it over path."""
    fileutils.ensure_tree(os.path.dirname(path))
    tmp_path = path + '.tmp'
    handle = open(tmp_path, mode, newline='' if 'b' not in mode else None)
    try:
        yield handle
        handle.close()
        os.replace(tmp_path, path)
    except Exception:
        with excutils.save_and_reraise_exception():
            handle.close()
            fileutils.delete_if_exists(tmp_path)
