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
import pandas as pd

from voltvar.common import constants
from voltvar.utils import exceptions


def avg_loss(datasets, rules):
    """Squared error of per-DER rules on the real points, per point.

    sum_k ||q_k - rule(v_k)||^2 / (K C)
    """
    if len(datasets) != len(rules):
        raise exceptions.InvalidParameterError(
            "{} datasets but {} rules".format(len(datasets), len(rules)))
    total = 0.0
    points = 0
    for dataset, rule in zip(datasets, rules):
        mask = dataset.real_mask
        v = dataset.v[mask]
        q = dataset.q[mask]
        predicted = np.array([float(rule(x)) for x in v])
        total += float(np.sum((q - predicted) ** 2))
        points += v.shape[0]
    if points == 0:
        raise exceptions.InvalidParameterError("no real points to score")
    return total / points


def _reference_vector(reference):
    q_star = np.asarray(getattr(reference, 'q_star', reference), dtype=float)
    if not getattr(reference, 'optimal', True):
        return np.full(q_star.shape, np.nan)
    return q_star


def distance_metric(traces, references):
    """Distance between the setpoints and the ORPF reference per step.

    :param references: one ORPF solution (or q vector) per trace; a
                       reference that is not optimal yields nan distances
                       that the day average skips
    :return: (per_step, day_average) with per_step of shape (S, T)
    """
    if len(traces) != len(references):
        raise exceptions.InvalidParameterError(
            "{} traces but {} references".format(len(traces),
                                                len(references)))
    rows = []
    for trace, reference in zip(traces, references):
        index = getattr(reference, 'scenario_index', None)
        if index is not None and index != trace.scenario_index:
            raise exceptions.InvalidParameterError(
                "trace of scenario {} paired with reference of scenario "
                "{}".format(trace.scenario_index, index))
        q_star = _reference_vector(reference)
        if q_star.shape[-1] != trace.q_history.shape[1]:
            raise exceptions.InvalidParameterError(
                "reference has {} entries for {} DERs".format(
                    q_star.shape[-1], trace.q_history.shape[1]))
        rows.append(np.linalg.norm(trace.q_history - q_star, axis=1))
    per_step = np.vstack(rows) if rows else np.empty((0, 0))
    finite = per_step[np.isfinite(per_step)]
    average = float(np.mean(finite)) if finite.size else np.nan
    return per_step, average


def voltage_envelope(traces):
    """Highest and lowest bus voltage at every step of every trace."""
    frames = []
    for trace in traces:
        steps = trace.v_history.shape[0]
        frames.append(pd.DataFrame({
            'scenario_id': np.full(steps, trace.scenario_index),
            'step': np.arange(steps),
            'v_max': np.max(trace.v_history, axis=1),
            'v_min': np.min(trace.v_history, axis=1),
        }))
    if not frames:
        return pd.DataFrame(columns=['scenario_id', 'step', 'v_max',
                                     'v_min'])
    return pd.concat(frames, ignore_index=True)


def box_violations(traces, q_min, q_max, tol=1e-12):
    """Count of trace entries outside the reactive box."""
    count = 0
    for trace in traces:
        q = trace.q_history
        count += int(np.count_nonzero((q < q_min - tol) | (q > q_max + tol)))
    return count


def summarize(traces, distances, v_min, v_max):
    """One-row summary of a day run."""
    _, average = distances
    verdicts = [trace.verdict for trace in traces]
    envelope = voltage_envelope(traces)
    v_all = np.vstack([trace.v_history for trace in traces])
    outside = (v_all < v_min) | (v_all > v_max)
    return {
        'scenarios': len(traces),
        'converged': verdicts.count(constants.VERDICT_CONVERGED),
        'oscillating': verdicts.count(constants.VERDICT_OSCILLATING),
        'not_converged': verdicts.count(constants.VERDICT_NOT_CONVERGED),
        'ac_failures': verdicts.count(constants.VERDICT_AC_FAILURE),
        'average_distance': average,
        'final_residual_max': float(np.nanmax(
            [trace.residual[-1] for trace in traces])) if traces else np.nan,
        'v_max': float(np.nanmax(envelope['v_max'])),
        'v_min': float(np.nanmin(envelope['v_min'])),
        'voltage_violation_fraction': float(np.mean(outside)),
    }
