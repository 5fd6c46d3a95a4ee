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
Daily injection profiles and the scenarios drawn from them.

A profile table has one row per time step and the columns ``p_<bus>`` for
every non-substation bus and ``q_<bus>`` for every load bus, in p.u. with
generation positive.
"""

import numpy as np
import pandas as pd
from oslo_log import log as logging

from voltvar.common import constants
from voltvar.common import data_models
from voltvar.utils import exceptions
from voltvar.utils import seeding

LOG = logging.getLogger(__name__)

HOURS = 24.0
SUNRISE = 6.0
SUNSET = 20.0
CLOUD_WINDOW = 15


def profile_columns(feeder):
    return ([constants.PREFIX_P + str(b) for b in range(1, feeder.bus_count)]
            + [constants.PREFIX_Q + str(b) for b in feeder.load_buses])


def _load_shape(hours):
    return (0.55
            + 0.25 * np.exp(-((hours - 8.0) / 1.8) ** 2)
            + 0.45 * np.exp(-((hours - 19.0) / 2.5) ** 2)
            + 0.05 * np.sin(2.0 * np.pi * hours / HOURS))


def _solar_shape(hours):
    daylight = (hours > SUNRISE) & (hours < SUNSET)
    shape = np.zeros_like(hours)
    shape[daylight] = np.sin(np.pi * (hours[daylight] - SUNRISE)
                             / (SUNSET - SUNRISE))
    return shape


def synthesize_profiles(feeder, steps=1440, peak_load_factor=1.65, seed=0):
    """Minute-based daily load and solar profiles for a feeder.

    Loads follow a two-peak daily shape with per-bus time shifts and noise,
    scaled so the aggregate peak is peak_load_factor times the nominal
    load. Reactive loads keep each bus's nominal power factor. DER buses
    carry a cloudy solar bell scaled to their PV capacity.
    """
    rng = seeding.rng_for(seed, 'profiles')
    hours = np.arange(steps) * HOURS / steps
    n = feeder.n

    shapes = np.empty((steps, n))
    for idx in range(n):
        shift = rng.uniform(-0.5, 0.5)
        noise = rng.normal(0.0, 0.02, steps)
        shapes[:, idx] = np.clip(_load_shape(hours - shift) * (1.0 + noise),
                                 0.0, None)
    nominal_total = float(np.sum(feeder.nominal_p))
    if nominal_total > 0.0:
        total = shapes @ feeder.nominal_p
        shapes *= peak_load_factor * nominal_total / np.max(total)

    demand_p = shapes * feeder.nominal_p
    demand_q = shapes * feeder.nominal_q
    p = -demand_p

    solar = _solar_shape(hours)
    for pos, bus in enumerate(feeder.der_buses):
        cloud = 1.0 - 0.3 * rng.uniform(0.0, 1.0, steps)
        cloud = pd.Series(cloud).rolling(CLOUD_WINDOW, min_periods=1,
                                         center=True).mean().to_numpy()
        p[:, bus - 1] += feeder.pv_capacity[pos] * solar * cloud

    load_index = np.asarray(feeder.load_buses, dtype=int) - 1
    data = np.hstack([p, -demand_q[:, load_index]])
    frame = pd.DataFrame(data, columns=profile_columns(feeder))
    frame.index.name = 'step'
    return frame


def validate_profiles(frame, feeder, file_name='<memory>'):
    missing = [c for c in profile_columns(feeder) if c not in frame.columns]
    if missing:
        raise exceptions.InputFileError(
            file_name=file_name,
            reason="missing profile columns {}".format(", ".join(missing)))
    values = frame[profile_columns(feeder)].to_numpy(dtype=float)
    if values.shape[0] == 0 or not np.all(np.isfinite(values)):
        raise exceptions.InputFileError(
            file_name=file_name, reason="profiles empty or non-finite")
    return frame


def read_profiles(path, feeder):
    try:
        frame = pd.read_csv(path, index_col=0, float_precision='round_trip')
    except (OSError, ValueError) as err:
        raise exceptions.InputFileError(file_name=path, reason=err)
    return validate_profiles(frame, feeder, file_name=path)


def write_profiles(frame, path):
    frame.to_csv(path, float_format=constants.FLOAT_FORMAT)


def generate_scenarios(base_profiles, feeder, count, perturbation=0.0,
                       seed=0, stream=constants.SEED_SCENARIOS):
    """Draw count scenarios from the profile rows.

    Rows are taken at evenly spaced steps over the day (all rows when count
    equals the table length). Each entry is scaled by a factor uniform in
    [1 - perturbation, 1 + perturbation].
    """
    if count < 1:
        raise exceptions.InvalidParameterError("scenario count must be >= 1")
    columns = profile_columns(feeder)
    p_cols = columns[:feeder.n]
    q_cols = columns[feeder.n:]
    steps = len(base_profiles)
    rows = np.floor(np.arange(count) * steps / count).astype(int)

    p = base_profiles[p_cols].to_numpy(dtype=float)[rows]
    q_l = base_profiles[q_cols].to_numpy(dtype=float)[rows]
    if perturbation > 0.0:
        rng = seeding.rng_for(seed, stream)
        p = p * rng.uniform(1.0 - perturbation, 1.0 + perturbation, p.shape)
        q_l = q_l * rng.uniform(1.0 - perturbation, 1.0 + perturbation,
                                q_l.shape)

    LOG.debug("Generated %d scenarios (perturbation %.3f)", count,
              perturbation)
    return [data_models.Scenario(p=p[k], q_L=q_l[k], index=k,
                                 timestamp=int(rows[k]))
            for k in range(count)]
