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
from oslo_log import log as logging
from scipy import linalg
from scipy import sparse
from scipy.sparse import csgraph

from voltvar.common import constants
from voltvar.common import data_models
from voltvar.utils import decorators
from voltvar.utils import exceptions

LOG = logging.getLogger(__name__)

# beyond this the reduced admittance is treated as singular
MAX_CONDITION = 1e12


def _unreachable_buses(spec):
    rows = [f for f, _, _ in spec.lines]
    cols = [t for _, t, _ in spec.lines]
    adjacency = sparse.coo_matrix(
        (np.ones(len(rows)), (rows, cols)),
        shape=(spec.bus_count, spec.bus_count))
    _, labels = csgraph.connected_components(adjacency, directed=False)
    root = labels[constants.SUBSTATION_BUS]
    return np.flatnonzero(labels != root)


def build_admittance(spec):
    """Bus admittance matrix Y = Y_L + diag(y_T) of the whole feeder.

    :param spec: validated FeederSpec
    :return: complex (N+1)x(N+1) ndarray
    """
    unreachable = _unreachable_buses(spec)
    if unreachable.size:
        raise exceptions.DisconnectedFeederError(unreachable)

    rows, cols, vals = [], [], []
    for f, t, z in spec.lines:
        y = 1.0 / z
        rows += [f, t, f, t]
        cols += [f, t, t, f]
        vals += [y, y, -y, -y]
    # coo sums duplicates, parallel lines add up
    laplacian = sparse.coo_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)),
        shape=(spec.bus_count, spec.bus_count)).toarray()
    shunts = np.concatenate([[0.0], spec.shunts])
    return laplacian + np.diag(shunts)


def spectral_norm(M):
    """Largest singular value of M."""
    M = decorators.ensure_finite(M, "matrix")
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(np.atleast_2d(M), 2))


@decorators.RaisesNumericalError('sensitivity derivation')
def derive_sensitivity(Y, spec):
    """Linearized voltage model around the zero-injection solution.

    The substation row and column are removed, the reduced matrix is
    inverted with LU and the zero-injection voltage is u = -Z y_0.
    """
    y_tilde = np.asarray(Y[1:, 1:], dtype=complex)
    y_0 = np.asarray(Y[1:, 0], dtype=complex)

    condition = np.linalg.cond(y_tilde)
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise exceptions.SingularAdmittanceError(condition)

    lu_piv = linalg.lu_factor(y_tilde)
    z_tilde = linalg.lu_solve(lu_piv, np.eye(y_tilde.shape[0],
                                             dtype=complex))
    # Y is symmetric so its inverse is too, remove rounding asymmetry
    z_tilde = 0.5 * (z_tilde + z_tilde.T)
    u_hat = -z_tilde @ y_0

    der_index = np.asarray(spec.der_buses, dtype=int) - 1
    load_index = np.asarray(spec.load_buses, dtype=int) - 1
    model = data_models.SensitivityModel(
        feeder=spec, y_tilde=y_tilde, y_0=y_0, z_tilde=z_tilde, u_hat=u_hat,
        der_index=der_index, load_index=load_index)
    model.x_norm = spectral_norm(model.X)

    min_eig = float(np.min(np.linalg.eigvalsh(model.X)))
    if min_eig <= 0.0:
        raise exceptions.NotPositiveDefiniteError(eig=min_eig)

    LOG.debug("Sensitivity model: N=%d, C=%d, ||X||=%.6g, cond=%.3e",
              model.n, model.c, model.x_norm, condition)
    return model


def build_model(spec):
    """Shortcut for derive_sensitivity(build_admittance(spec), spec)."""
    return derive_sensitivity(build_admittance(spec), spec)
