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

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


class VoltVarException(Exception):
    exit_code = EXIT_NUMERICAL
    message = "An unknown exception occurred."

    def __init__(self, message=None, **kwargs):
        if message is None:
            message = self.message.format(**kwargs)
        self.message = message
        super(VoltVarException, self).__init__(message)


class ConfigurationError(VoltVarException):
    exit_code = EXIT_CONFIG


class InputFileError(ConfigurationError):
    message = "Invalid input file {file_name}: {reason}"

    def __init__(self, file_name='', reason=''):
        super(InputFileError, self).__init__(file_name=file_name,
                                             reason=reason)
        self.file_name = file_name
        self.reason = reason


class MissingArtifactsError(ConfigurationError):
    def __init__(self, missing):
        self.missing = list(missing)
        super(MissingArtifactsError, self).__init__(
            "Missing artifacts: {}".format(", ".join(self.missing)))


class InvalidParameterError(VoltVarException, ValueError):
    exit_code = EXIT_CONFIG


class InfeasibilityError(VoltVarException):
    exit_code = EXIT_INFEASIBLE


class EmptyDatasetError(InfeasibilityError):
    message = "All {count} scenarios are infeasible, no training data left."


class NumericalError(VoltVarException):
    exit_code = EXIT_NUMERICAL


class DisconnectedFeederError(NumericalError):
    def __init__(self, unreachable):
        self.unreachable = sorted(int(b) for b in unreachable)
        super(DisconnectedFeederError, self).__init__(
            "Feeder graph is disconnected, buses unreachable from the "
            "substation: {}".format(self.unreachable))


class SingularAdmittanceError(NumericalError):
    def __init__(self, condition):
        self.condition = condition
        super(SingularAdmittanceError, self).__init__(
            "Reduced admittance matrix is singular (condition estimate "
            "{:.3e})".format(condition))


class NotPositiveDefiniteError(NumericalError):
    message = "Sensitivity matrix is not positive definite (min eig {eig})"


class EquilibriumNotFoundError(NumericalError):
    message = ("No equilibrium after {iterations} iterations "
               "(residual {residual:.3e})")


class InvalidEquilibriumFunctionError(NumericalError):
    message = "Equilibrium function violates its invariants: {reason}"
