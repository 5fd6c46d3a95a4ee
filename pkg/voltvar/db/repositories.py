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

"""
File repositories for the artifacts of a run directory.

Tables are CSV written with 17 significant digits, so floats read back
bit-identical; equilibrium functions are JSON.
"""

import glob
import json
import os

import numpy as np
import pandas as pd
from oslo_log import log as logging

from voltvar.common import constants
from voltvar.common import data_models
from voltvar.control import droop
from voltvar.db import api
from voltvar.learning import network
from voltvar.utils import exceptions

LOG = logging.getLogger(__name__)


def _write_frame(frame, path, index=False):
    with api.atomic_write(path) as handle:
        frame.to_csv(handle, index=index,
                     float_format=constants.FLOAT_FORMAT)


def _read_frame(path, **kwargs):
    if not os.path.isfile(path):
        raise exceptions.MissingArtifactsError([path])
    try:
        return pd.read_csv(path, float_precision='round_trip', **kwargs)
    except (OSError, ValueError) as err:
        raise exceptions.InputFileError(file_name=path, reason=err)


def _write_json(document, path):
    with api.atomic_write(path) as handle:
        json.dump(document, handle, indent=2, sort_keys=True)
        handle.write('\n')


def _bus_from_name(path):
    name = os.path.splitext(os.path.basename(path))[0]
    return int(name[len(constants.PREFIX_DER):])


class BaseRepository(object):
    def __init__(self, run_dir):
        self.run_dir = run_dir


class DatasetRepository(BaseRepository):
    COLUMNS = ['v', 'q', 'kind', 'scenario_id', 'q_min', 'q_max']

    def _path(self, alpha, der_bus):
        return self.run_dir.alpha_path(
            alpha, constants.DIR_DATASETS,
            '{}{}.csv'.format(constants.PREFIX_DER, der_bus))

    def create(self, alpha, dataset):
        frame = pd.DataFrame({
            'v': dataset.v, 'q': dataset.q, 'kind': dataset.kinds,
            'scenario_id': dataset.scenario_ids,
            'q_min': dataset.q_min, 'q_max': dataset.q_max,
        }, columns=self.COLUMNS)
        path = self._path(alpha, dataset.der_bus)
        _write_frame(frame, path)
        return path

    def get(self, alpha, der_bus):
        path = self._path(alpha, der_bus)
        frame = _read_frame(path)
        missing = set(self.COLUMNS) - set(frame.columns)
        if missing:
            raise exceptions.InputFileError(
                file_name=path,
                reason="missing columns {}".format(sorted(missing)))
        if frame.empty:
            raise exceptions.InputFileError(file_name=path,
                                            reason="no data points")
        return data_models.LocalDataset(
            der_bus=der_bus, q_min=frame['q_min'].iloc[0],
            q_max=frame['q_max'].iloc[0], v=frame['v'].to_numpy(float),
            q=frame['q'].to_numpy(float),
            kinds=frame['kind'].astype(str).to_numpy(object),
            scenario_ids=frame['scenario_id'].to_numpy(int)).validate()

    def get_all(self, alpha, der_buses):
        return [self.get(alpha, bus) for bus in der_buses]


class SkipLogRepository(BaseRepository):
    COLUMNS = ['scenario_id', 'status', 'violation']

    def _path(self, alpha):
        return self.run_dir.alpha_path(alpha, constants.FILE_SKIPPED)

    def create(self, alpha, records):
        frame = pd.DataFrame(
            [(r.scenario_id, r.status, r.violation) for r in records],
            columns=self.COLUMNS)
        _write_frame(frame, self._path(alpha))
        return self._path(alpha)


class ORPFRepository(BaseRepository):
    """Batch of ORPF solutions, one row per scenario."""

    META = ['scenario_id', 'status', 'objective', 'kkt_residual',
            'iterations', 'violation']

    def __init__(self, run_dir, file_name=constants.FILE_ORPF):
        super(ORPFRepository, self).__init__(run_dir)
        self.file_name = file_name

    def _path(self, alpha):
        return self.run_dir.alpha_path(alpha, self.file_name)

    def create(self, alpha, model, solutions):
        q_cols = [constants.PREFIX_QSTAR + str(b) for b in model.der_buses]
        v_cols = [constants.PREFIX_VSTAR + str(b) for b in model.bus_ids]
        rows = []
        for solution in solutions:
            q_star = np.broadcast_to(np.asarray(solution.q_star, float),
                                     (model.c,))
            v_star = np.broadcast_to(np.asarray(solution.v_star, float),
                                     (model.n,))
            rows.append([solution.scenario_index, solution.status,
                         solution.objective, solution.kkt_residual,
                         solution.iterations, solution.violation]
                        + q_star.tolist() + v_star.tolist())
        frame = pd.DataFrame(rows, columns=self.META + q_cols + v_cols)
        _write_frame(frame, self._path(alpha))
        return self._path(alpha)

    def get_all(self, alpha, model):
        path = self._path(alpha)
        frame = _read_frame(path)
        q_cols = [constants.PREFIX_QSTAR + str(b) for b in model.der_buses]
        v_cols = [constants.PREFIX_VSTAR + str(b) for b in model.bus_ids]
        missing = set(self.META + q_cols + v_cols) - set(frame.columns)
        if missing:
            raise exceptions.InputFileError(
                file_name=path,
                reason="missing columns {}".format(sorted(missing)))
        q_star = frame[q_cols].to_numpy(float)
        v_star = frame[v_cols].to_numpy(float)
        return [data_models.ORPFSolution(
            q_star=q_star[k], v_star=v_star[k],
            objective=row['objective'], status=row['status'],
            kkt_residual=row['kkt_residual'],
            iterations=int(row['iterations']), violation=row['violation'],
            scenario_index=int(row['scenario_id']))
            for k, row in enumerate(frame[self.META].to_dict('records'))]


class FunctionRepository(BaseRepository):
    def _dir(self, alpha):
        return self.run_dir.alpha_path(alpha, constants.DIR_FUNCTIONS)

    def _path(self, alpha, der_bus):
        return os.path.join(self._dir(alpha), '{}{}.json'.format(
            constants.PREFIX_DER, der_bus))

    def create(self, alpha, phi):
        # invariant violations are never written
        phi.validate()
        path = self._path(alpha, phi.der_bus)
        _write_json(phi.to_dict(), path)
        return path

    def get(self, alpha, der_bus):
        path = self._path(alpha, der_bus)
        if not os.path.isfile(path):
            raise exceptions.MissingArtifactsError([path])
        try:
            with open(path) as handle:
                document = json.load(handle)
        except (OSError, ValueError) as err:
            raise exceptions.InputFileError(file_name=path, reason=err)
        phi = network.EquilibriumFunction.from_dict(document)
        if phi.der_bus is not None and int(phi.der_bus) != int(der_bus):
            raise exceptions.InputFileError(
                file_name=path,
                reason="function belongs to DER {}".format(phi.der_bus))
        return phi

    def get_all(self, alpha, der_buses):
        missing = [self._path(alpha, bus) for bus in der_buses
                   if not os.path.isfile(self._path(alpha, bus))]
        if missing:
            raise exceptions.MissingArtifactsError(missing)
        return [self.get(alpha, bus) for bus in der_buses]

    def list_buses(self, alpha):
        pattern = os.path.join(self._dir(alpha),
                               constants.PREFIX_DER + '*.json')
        return sorted(_bus_from_name(p) for p in glob.glob(pattern))


class DroopRepository(BaseRepository):
    COLUMNS = ['der_bus', 'vbar_min', 'vbar_max', 'loss']

    def _path(self, alpha):
        return self.run_dir.alpha_path(alpha, constants.FILE_DROOP)

    def create(self, alpha, params):
        frame = pd.DataFrame(
            [(p.der_bus, p.vbar_min, p.vbar_max, p.loss) for p in params],
            columns=self.COLUMNS)
        _write_frame(frame, self._path(alpha))
        return self._path(alpha)

    def get_all(self, alpha, der_buses):
        frame = _read_frame(self._path(alpha)).set_index('der_bus')
        missing = [b for b in der_buses if b not in frame.index]
        if missing:
            raise exceptions.MissingArtifactsError(
                ["droop parameters of DER {}".format(b) for b in missing])
        return [droop.DroopParams(bus, frame.at[bus, 'vbar_min'],
                                  frame.at[bus, 'vbar_max'],
                                  frame.at[bus, 'loss'])
                for bus in der_buses]


class TraceRepository(BaseRepository):
    def _path(self, alpha, kind, noise):
        return self.run_dir.alpha_path(
            alpha, constants.DIR_TRACES,
            self.run_dir.configuration_name(kind, noise) + '.csv')

    def exists(self, alpha, kind, noise):
        return os.path.isfile(self._path(alpha, kind, noise))

    def create(self, alpha, kind, noise, model, traces):
        q_cols = [constants.PREFIX_Q + str(b) for b in model.der_buses]
        v_cols = [constants.PREFIX_V + str(b) for b in model.bus_ids]
        frames = []
        for trace in traces:
            steps = trace.q_history.shape[0]
            frame = pd.DataFrame(
                np.hstack([trace.q_history, trace.v_history]),
                columns=q_cols + v_cols)
            frame.insert(0, 'scenario_id', trace.scenario_index)
            frame.insert(0, 'step', np.arange(steps))
            frame['residual'] = trace.residual
            frame['verdict'] = trace.verdict
            frames.append(frame)
        path = self._path(alpha, kind, noise)
        _write_frame(pd.concat(frames, ignore_index=True), path)
        return path


class SummaryRepository(BaseRepository):
    def _path(self, alpha, kind, noise, suffix=''):
        return self.run_dir.alpha_path(
            alpha, constants.DIR_SUMMARIES,
            self.run_dir.configuration_name(kind, noise) + suffix + '.csv')

    def create(self, alpha, kind, noise, summary, envelope=None,
               distances=None):
        row = dict(summary, alpha=alpha, controller=kind, noise=noise)
        _write_frame(pd.DataFrame([row]), self._path(alpha, kind, noise))
        if envelope is not None:
            if distances is not None:
                envelope = envelope.assign(
                    distance=np.asarray(distances).reshape(-1))
            _write_frame(envelope,
                         self._path(alpha, kind, noise, '_per_step'))
        return self._path(alpha, kind, noise)

    def get(self, alpha, kind, noise):
        return _read_frame(self._path(alpha, kind, noise)).iloc[0].to_dict()


class TableRepository(BaseRepository):
    """Plain tables: train report, bound report and evaluation tables."""

    def create(self, frame, *parts, index=False):
        path = self.run_dir.path(*parts)
        _write_frame(frame, path, index=index)
        return path

    def get(self, *parts, **kwargs):
        return _read_frame(self.run_dir.path(*parts), **kwargs)


class RunConfigRepository(BaseRepository):
    def create(self, options, config_files=()):
        """Keep the configs used and the effective option values."""
        for source in config_files:
            with open(source) as handle:
                content = handle.read()
            with api.atomic_write(self.run_dir.path(
                    os.path.basename(source))) as handle:
                handle.write(content)
        path = self.run_dir.path(constants.FILE_RUN_CONFIG)
        _write_json(options, path)
        LOG.debug("Wrote run configuration to %s", path)
        return path
