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
Reads feeder description files.

A feeder file is one JSON document with the sections ``buses``, ``lines``,
``shunts`` (optional), ``ders`` and ``limits``. All quantities are per-unit
on the base given in the ``base`` section; bus 0 is the substation::

    {"base": {"kv": 4.8, "mva": 1.0},
     "buses": [{"id": 0}, {"id": 1, "load_p": 0.08, "load_q": 0.04}],
     "lines": [{"from": 0, "to": 1, "r": 0.01, "x": 0.02}],
     "shunts": [{"bus": 1, "g": 0.0, "b": 0.01}],
     "ders": [{"bus": 1, "q_min": -0.4, "q_max": 0.4, "pv_capacity": 0.5}],
     "limits": {"v_min": 0.95, "v_max": 1.05,
                "overrides": [{"bus": 1, "v_min": 0.94}]}}

``load_p``/``load_q`` are nominal consumptions (positive when drawing
power) used by the synthetic profile generator.
"""

import json

import numpy as np
from oslo_log import log as logging

from voltvar.common import constants
from voltvar.common import data_models
from voltvar.utils import exceptions

LOG = logging.getLogger(__name__)


def _read_json(path):
    try:
        with open(path) as json_file:
            return json.load(json_file)
    except (OSError, ValueError) as err:
        LOG.error('Feeder file is invalid: %s', err)
        raise exceptions.InputFileError(file_name=path, reason=err)


def parse_feeder(document, file_name='<memory>'):
    """Build a FeederSpec from a decoded feeder document."""
    missing = [s for s in constants.FEEDER_REQUIRED_SECTIONS
               if s not in document]
    if missing:
        raise exceptions.InputFileError(
            file_name=file_name,
            reason="missing sections {}".format(", ".join(missing)))
    try:
        ids = sorted(int(bus['id']) for bus in document['buses'])
        if ids != list(range(len(ids))):
            raise ValueError("bus ids must be 0..N without gaps")
        bus_count = len(ids)
        n = bus_count - 1

        nominal_p = np.zeros(n)
        nominal_q = np.zeros(n)
        for bus in document['buses']:
            idx = int(bus['id'])
            if idx == constants.SUBSTATION_BUS:
                continue
            nominal_p[idx - 1] = float(bus.get('load_p', 0.0))
            nominal_q[idx - 1] = float(bus.get('load_q', 0.0))

        lines = [(int(line['from']), int(line['to']),
                  complex(float(line['r']), float(line['x'])))
                 for line in document['lines']]

        shunts = np.zeros(n, dtype=complex)
        for shunt in document.get(constants.FEEDER_SHUNTS, []):
            bus = int(shunt['bus'])
            if not 1 <= bus <= n:
                raise ValueError("shunt at unknown bus {}".format(bus))
            shunts[bus - 1] += complex(float(shunt.get('g', 0.0)),
                                       float(shunt.get('b', 0.0)))

        ders = document['ders']
        der_buses = [int(d['bus']) for d in ders]
        q_min = [float(d['q_min']) for d in ders]
        q_max = [float(d['q_max']) for d in ders]
        pv_capacity = [float(d.get('pv_capacity', 0.0)) for d in ders]

        limits = document['limits']
        v_min = np.full(n, float(limits['v_min']))
        v_max = np.full(n, float(limits['v_max']))
        for override in limits.get('overrides', []):
            bus = int(override['bus'])
            if not 1 <= bus <= n:
                raise ValueError("limit override at unknown bus {}".format(
                    bus))
            v_min[bus - 1] = float(override.get('v_min', v_min[bus - 1]))
            v_max[bus - 1] = float(override.get('v_max', v_max[bus - 1]))
    except (KeyError, TypeError, ValueError) as err:
        raise exceptions.InputFileError(file_name=file_name, reason=err)

    spec = data_models.FeederSpec(
        bus_count=bus_count, lines=lines, shunts=shunts,
        der_buses=der_buses, q_min=q_min, q_max=q_max, v_min=v_min,
        v_max=v_max, nominal_p=nominal_p, nominal_q=nominal_q,
        pv_capacity=pv_capacity, base=document.get(constants.FEEDER_BASE),
        name=document.get('name'))
    try:
        spec.validate()
    except exceptions.InvalidParameterError as err:
        raise exceptions.InputFileError(file_name=file_name,
                                        reason=err.message)
    return spec


def load_feeder(path):
    spec = parse_feeder(_read_json(path), file_name=path)
    LOG.info("Loaded feeder %s: %d buses, %d lines, DERs at %s",
             spec.name or path, spec.bus_count, len(spec.lines),
             spec.der_buses)
    return spec
