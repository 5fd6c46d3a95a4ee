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

import os

import futurist
import numpy as np
import pandas as pd
import prometheus_client as prometheus
from oslo_config import cfg
from oslo_log import log as logging

from voltvar.common import config
from voltvar.common import constants
from voltvar.common import data_models
from voltvar.control import droop
from voltvar.control import metrics
from voltvar.control import simulator
from voltvar.dataset import builder
from voltvar.dataset import profiles
from voltvar.db import api as db_api
from voltvar.db import repositories
from voltvar.grid import feeder
from voltvar.grid import model as grid_model
from voltvar.learning import trainer
from voltvar.utils import driver_utils
from voltvar.utils import exceptions
from voltvar.utils import seeding

CONF = cfg.CONF
LOG = logging.getLogger(__name__)


class ExperimentWorker(object):
    """Runs the learning and control stages over one run directory."""

    _metric_orpf_solves = prometheus.metrics.Counter(
        'voltvar_orpf_solves', 'Number of ORPF solves by status', ['status'])
    _metric_skipped = prometheus.metrics.Counter(
        'voltvar_skipped_scenarios', 'Number of infeasible scenarios skipped')
    _metric_trainings = prometheus.metrics.Counter(
        'voltvar_trainings', 'Number of equilibrium functions trained')
    _metric_training_duration = prometheus.metrics.Summary(
        'voltvar_training_duration', 'Time it needs to train one function')
    _metric_simulations = prometheus.metrics.Counter(
        'voltvar_simulated_scenarios', 'Number of simulated scenarios',
        ['controller', 'verdict'])
    _metric_ac_failures = prometheus.metrics.Counter(
        'voltvar_ac_failures', 'Number of AC power flow failures in the loop')

    def __init__(self, conf=None, executor=None):
        self.conf = conf or CONF
        self.feeder = feeder.load_feeder(self.conf.feeder_file)
        self.model = grid_model.build_model(self.feeder)
        self.run_dir = db_api.get_run_directory(self.conf.out)
        if executor is None:
            executor = (futurist.SynchronousExecutor()
                        if self.conf.workers == 1 else
                        futurist.ThreadPoolExecutor(
                            max_workers=self.conf.workers))
        self.executor = executor

        self._dataset_repo = repositories.DatasetRepository(self.run_dir)
        self._skip_repo = repositories.SkipLogRepository(self.run_dir)
        self._orpf_repo = repositories.ORPFRepository(self.run_dir)
        self._reference_repo = repositories.ORPFRepository(
            self.run_dir, file_name=constants.FILE_REFERENCE)
        self._function_repo = repositories.FunctionRepository(self.run_dir)
        self._droop_repo = repositories.DroopRepository(self.run_dir)
        self._trace_repo = repositories.TraceRepository(self.run_dir)
        self._summary_repo = repositories.SummaryRepository(self.run_dir)
        self._table_repo = repositories.TableRepository(self.run_dir)
        self._profiles = None
        LOG.info("Loaded feeder %s: %d buses, %d DERs, ||X|| = %.6g",
                 self.feeder.name, self.model.n + 1, self.model.c,
                 self.model.x_norm)

    def shutdown(self):
        self.executor.shutdown()

    # scenarios

    @property
    def base_profiles(self):
        if self._profiles is None:
            if self.conf.profiles_file:
                self._profiles = profiles.read_profiles(
                    self.conf.profiles_file, self.feeder)
            else:
                self._profiles = profiles.synthesize_profiles(
                    self.feeder, steps=self.conf.dataset.profile_steps,
                    peak_load_factor=self.conf.dataset.peak_load_factor,
                    seed=self.conf.seed)
                # reusable as profiles_file
                path = os.path.join(self.run_dir.ensure(),
                                    constants.FILE_PROFILES)
                profiles.write_profiles(self._profiles, path)
                LOG.debug("Wrote synthesized profiles to %s", path)
        return self._profiles

    def forecast_scenarios(self):
        return profiles.generate_scenarios(
            self.base_profiles, self.feeder,
            self.conf.dataset.scenario_count,
            perturbation=self.conf.dataset.perturbation,
            seed=self.conf.seed, stream=constants.SEED_SCENARIOS)

    def realized_scenarios(self):
        return profiles.generate_scenarios(
            self.base_profiles, self.feeder,
            self.conf.dataset.scenario_count,
            perturbation=self.conf.control.realization_perturbation,
            seed=self.conf.seed, stream=constants.SEED_REALIZATION)

    def _count_solutions(self, solutions):
        for solution in solutions:
            self._metric_orpf_solves.labels(status=solution.status).inc()
            if solution.status == constants.STATUS_MAX_ITER:
                LOG.warning("ORPF of scenario %d stopped at the iteration "
                            "limit (residual %.3e), skipped",
                            solution.scenario_index, solution.kkt_residual)

    # learning stage

    def build_dataset(self, alpha):
        """ORPF minimizers plus pseudo points, persisted per DER.

        :returns: (datasets, skip_log)
        """
        scenarios = self.forecast_scenarios()
        solutions = builder.solve_batch(self.model, scenarios, alpha,
                                        executor=self.executor)
        self._count_solutions(solutions)
        self._orpf_repo.create(alpha, self.model, solutions)

        skip_log = [builder.SkipRecord(s.scenario_index, s.status,
                                       s.violation)
                    for s in solutions if not s.optimal]
        self._skip_repo.create(alpha, skip_log)
        self._metric_skipped.inc(len(skip_log))

        datasets, _, _ = builder.build_dataset(
            self.model, scenarios, alpha,
            voltage_model=self.conf.dataset.voltage_model,
            solutions=solutions)

        group = self.conf.dataset
        rng = seeding.rng_for(self.conf.seed, constants.SEED_PSEUDO)
        idx = self.model.der_index
        result = []
        for pos, dataset in enumerate(datasets):
            v_min = self.model.v_min[idx][pos]
            v_max = self.model.v_max[idx][pos]
            LOG.info("DER %d: %.4f of real point pairs violate "
                     "monotonicity", dataset.der_bus,
                     builder.monotone_inconsistency(dataset))
            low, high = builder.default_pseudo_ranges(
                v_min, v_max, group.pseudo_range_width)
            dataset = builder.add_pseudo_points(
                dataset, group.pseudo_low_count, group.pseudo_high_count,
                low, high, v_min, v_max, spacing=group.pseudo_spacing,
                rng=rng)
            dataset.validate(v_min, v_max)
            self._dataset_repo.create(alpha, dataset)
            result.append(dataset)
        LOG.info("Wrote %d datasets of %d points for alpha %s",
                 len(result), len(result[0]), db_api.format_value(alpha))
        return result, skip_log

    def slope_limit(self):
        value = config.slope_limit(self.conf)
        if value == constants.SLOPE_LIMIT_NONE:
            return None
        if value == constants.SLOPE_LIMIT_AUTO:
            return simulator.auto_slope_limit(self.model.x_norm)
        return value

    @_metric_training_duration.time()
    def _train_one(self, dataset, train_config):
        phi = trainer.train(dataset, self.conf.training.neurons,
                            train_config)
        self._metric_trainings.inc()
        return phi

    def train(self, alpha):
        """Fit one equilibrium function per DER and tune the droop curves.

        :returns: train report frame, one row per DER
        """
        datasets = self._dataset_repo.get_all(alpha, self.model.der_buses)
        train_config = data_models.TrainConfig.from_conf(
            self.conf, seed=self.conf.seed, slope_limit=self.slope_limit())
        futures = [self.executor.submit(self._train_one, dataset,
                                        train_config)
                   for dataset in datasets]
        functions = [future.result() for future in futures]
        for phi in functions:
            self._function_repo.create(alpha, phi)

        idx = self.model.der_index
        params = droop.optimize_droop_params(
            datasets, self.model.v_min[idx], self.model.v_max[idx])
        self._droop_repo.create(alpha, params)

        lipschitz = simulator.global_lipschitz(functions)
        rows = []
        for dataset, phi in zip(datasets, functions):
            real = dataset.real_mask
            rows.append({
                'der_bus': dataset.der_bus,
                'mse': trainer.mean_squared_error(phi, dataset.v, dataset.q),
                'mse_real': trainer.mean_squared_error(
                    phi, dataset.v[real], dataset.q[real]),
                'lipschitz': phi.lipschitz,
                'neurons': phi.H,
                'points': len(dataset),
            })
        report = pd.DataFrame(rows)
        report['slope_limit'] = (np.nan if train_config.slope_limit is None
                                 else train_config.slope_limit)
        report['global_lipschitz'] = lipschitz
        report['stepsize_bound'] = simulator.stepsize_bound(
            self.model.x_norm, lipschitz)
        self._table_repo.create(report, constants.DIR_ALPHA.format(
            db_api.format_value(alpha)), constants.FILE_TRAIN_REPORT)
        LOG.info("Trained %d functions for alpha %s, L = %.6g, "
                 "stepsize bound %.6g", len(functions),
                 db_api.format_value(alpha), lipschitz,
                 report['stepsize_bound'].iloc[0])
        return report

    def bound(self, alpha):
        """Stability figures of the trained functions on this feeder."""
        functions = self._function_repo.get_all(alpha, self.model.der_buses)
        x_norm = self.model.x_norm
        lipschitz = simulator.global_lipschitz(functions)
        report = {
            'x_norm': x_norm,
            'global_lipschitz': lipschitz,
            'stepsize_bound': simulator.stepsize_bound(x_norm, lipschitz),
            'local_stepsize_bound': simulator.local_stepsize_bound(
                x_norm, lipschitz),
            'auto_epsilon': simulator.auto_epsilon(x_norm, lipschitz),
            'non_incremental_certified':
                simulator.non_incremental_certified(x_norm, lipschitz),
        }
        for phi in functions:
            report['lipschitz_der_{}'.format(phi.der_bus)] = phi.lipschitz
        self._table_repo.create(pd.DataFrame([report]),
                                constants.DIR_ALPHA.format(
                                    db_api.format_value(alpha)),
                                constants.FILE_BOUND)
        return report

    # control stage

    def resolve_epsilon(self, functions, epsilon=None):
        epsilon = config.epsilon(self.conf) if epsilon is None else epsilon
        if epsilon != constants.EPSILON_AUTO:
            return float(epsilon)
        return simulator.auto_epsilon(self.model.x_norm,
                                      simulator.global_lipschitz(functions))

    def get_controller(self, alpha, kind, epsilon=None):
        kwargs = {}
        if kind in constants.LEARNED_CONTROLLERS:
            functions = self._function_repo.get_all(alpha,
                                                    self.model.der_buses)
            kwargs['functions'] = functions
            kwargs['epsilon'] = self.resolve_epsilon(functions, epsilon)
        elif kind == constants.CONTROLLER_DROOP_OPTIMIZED:
            kwargs['droop_params'] = self._droop_repo.get_all(
                alpha, self.model.der_buses)
        return driver_utils.get_controller(kind, self.model, **kwargs)

    def reference_solutions(self, alpha, scenarios=None):
        """Linearized ORPF optimum of every realized scenario."""
        try:
            return self._reference_repo.get_all(alpha, self.model)
        except exceptions.MissingArtifactsError:
            pass
        scenarios = scenarios or self.realized_scenarios()
        solutions = builder.solve_batch(self.model, scenarios, alpha,
                                        executor=self.executor)
        self._count_solutions(solutions)
        self._reference_repo.create(alpha, self.model, solutions)
        return solutions

    def simulate(self, alpha, kind, noise, epsilon=None, references=None):
        """One day run; persists traces and summaries.

        :returns: the day summary dict
        """
        controller = self.get_controller(alpha, kind, epsilon)
        scenarios = self.realized_scenarios()
        if references is None:
            references = self.reference_solutions(alpha, scenarios)
        group = self.conf.control
        controller_config = data_models.ControllerConfig(
            epsilon=getattr(controller, 'epsilon', 1.0),
            iterations=group.iterations, flow_model=group.flow_model,
            noise=noise, kind=kind, seed=self.conf.seed,
            convergence_tolerance=group.convergence_tolerance,
            divergence_threshold=group.divergence_threshold)
        traces = simulator.simulate(self.model, controller,
                                    controller_config, scenarios)

        for trace in traces:
            self._metric_simulations.labels(
                controller=kind, verdict=trace.verdict).inc()
            self._metric_ac_failures.inc(trace.ac_failures)
        violations = metrics.box_violations(traces, self.model.q_min,
                                            self.model.q_max)
        if violations:
            LOG.warning("%d setpoints left the reactive box", violations)

        distances = metrics.distance_metric(traces, references)
        summary = metrics.summarize(traces, distances, self.model.v_min,
                                    self.model.v_max)
        summary['epsilon'] = controller_config.epsilon
        summary['box_violations'] = violations
        self._trace_repo.create(alpha, kind, noise, self.model, traces)
        self._summary_repo.create(alpha, kind, noise, summary,
                                  envelope=metrics.voltage_envelope(traces),
                                  distances=distances[0])
        LOG.info("Day run %s at alpha %s noise %s: average distance %.6g",
                 kind, db_api.format_value(alpha), db_api.format_value(noise),
                 summary['average_distance'])
        return summary

    # evaluation

    def _missing(self, alpha, kinds, noise_levels):
        """Stages lacking for alpha, with the missing paths."""
        missing = []
        needs_functions = any(k in constants.LEARNED_CONTROLLERS
                              or k == constants.CONTROLLER_DROOP_OPTIMIZED
                              for k in kinds)
        datasets = [self.run_dir.alpha_path(
            alpha, constants.DIR_DATASETS,
            '{}{}.csv'.format(constants.PREFIX_DER, b))
            for b in self.model.der_buses]
        stored = set(self._function_repo.list_buses(alpha))
        foreign = sorted(stored - set(self.model.der_buses))
        if foreign:
            LOG.warning("Ignoring functions of buses %s without a DER on "
                        "feeder %s", foreign, self.feeder.name)
        functions = [self.run_dir.alpha_path(
            alpha, constants.DIR_FUNCTIONS,
            '{}{}.json'.format(constants.PREFIX_DER, b))
            for b in self.model.der_buses if b not in stored]
        droop_file = self.run_dir.alpha_path(alpha, constants.FILE_DROOP)
        if not os.path.isfile(droop_file):
            functions.append(droop_file)
        missing.extend(p for p in datasets if not os.path.isfile(p))
        if needs_functions:
            missing.extend(functions)
        runs = [(kind, noise) for kind in kinds for noise in noise_levels
                if not self._trace_repo.exists(alpha, kind, noise)]
        return missing, runs

    def _complete(self, alpha, missing, runs):
        if any(constants.DIR_DATASETS in path for path in missing):
            self.build_dataset(alpha)
        if any(constants.DIR_DATASETS not in path for path in missing):
            self.train(alpha)
        if runs:
            references = self.reference_solutions(alpha)
            futures = [self.executor.submit(self.simulate, alpha, kind,
                                            noise, references=references)
                       for kind, noise in runs]
            for future in futures:
                future.result()

    def evaluate(self):
        """Comparison tables over alphas and noise levels.

        :returns: (losses, distances, noise) frames with one row per
                  controller
        """
        group = self.conf.evaluation
        kinds = list(group.controllers)
        alphas = list(group.alphas)
        noise_levels = list(group.noise_levels)
        plan = {}
        for alpha in alphas:
            levels = noise_levels if alpha == self.conf.alpha else [0.0]
            plan[alpha] = self._missing(alpha, kinds, sorted(
                set(levels) | {0.0}))
        if self.conf.alpha not in plan:
            plan[self.conf.alpha] = self._missing(self.conf.alpha, kinds,
                                                  noise_levels)

        absent = []
        for alpha, (missing, runs) in plan.items():
            absent.extend(missing)
            absent.extend(self.run_dir.alpha_path(
                alpha, constants.DIR_TRACES,
                self.run_dir.configuration_name(kind, noise) + '.csv')
                for kind, noise in runs)
        if absent and not group.complete_missing:
            raise exceptions.MissingArtifactsError(absent)
        for alpha, (missing, runs) in plan.items():
            if missing or runs:
                self._complete(alpha, missing, runs)

        losses = pd.DataFrame(index=kinds, dtype=float)
        distances = pd.DataFrame(index=kinds, dtype=float)
        for alpha in alphas:
            column = db_api.format_value(alpha)
            rules = self.controller_rules(alpha, kinds)
            datasets = self._dataset_repo.get_all(alpha,
                                                  self.model.der_buses)
            losses[column] = [metrics.avg_loss(datasets, rules[kind])
                              for kind in kinds]
            distances[column] = [
                self._summary_repo.get(alpha, kind, 0.0)['average_distance']
                for kind in kinds]
        noise = pd.DataFrame(index=kinds, dtype=float)
        for level in noise_levels:
            noise[db_api.format_value(level)] = [
                self._summary_repo.get(self.conf.alpha, kind, level)[
                    'average_distance'] for kind in kinds]

        for frame, name in ((losses, constants.FILE_LOSSES),
                            (distances, constants.FILE_DISTANCES),
                            (noise, constants.FILE_NOISE)):
            frame.index.name = 'controller'
            self._table_repo.create(frame, constants.DIR_EVALUATION, name,
                                    index=True)
        return losses, distances, noise

    def controller_rules(self, alpha, kinds):
        """Per-DER rule of every controller, as scored by avg_loss."""
        rules = {}
        for kind in kinds:
            rules[kind] = self.get_controller(alpha, kind).rules
        return rules

    def write_metrics(self):
        path = self.conf.prometheus_textfile
        if path:
            prometheus.write_to_textfile(path, prometheus.REGISTRY)
            LOG.debug("Wrote metrics to %s", path)
