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

from contextlib import ContextDecorator

import numpy as np

from voltvar.utils.exceptions import NumericalError, VoltVarException


class RaisesNumericalError(ContextDecorator):
    """Converts linear algebra failures into NumericalError.

    Usable as decorator or as with-statement. Project exceptions pass
    through untouched.
    """

    def __init__(self, operation='numerical operation'):
        self.operation = operation

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, traceback):
        if exc_type is None or issubclass(exc_type, VoltVarException):
            return False
        if issubclass(exc_type, (np.linalg.LinAlgError, FloatingPointError,
                                 ZeroDivisionError)):
            raise NumericalError(
                "{} failed: {}".format(self.operation, exc_val)) from exc_val
        return False


def ensure_finite(values, what):
    """Raise NumericalError if values contain NaN or inf."""
    arr = np.asarray(values)
    if not np.all(np.isfinite(arr)):
        raise NumericalError("{} contains non-finite entries".format(what))
    return arr
