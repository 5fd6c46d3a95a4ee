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

PRODUCT_NAME = 'voltvar'
SUBSTATION_BUS = 0

# ORPF solution status
STATUS_OPTIMAL = 'optimal'
STATUS_INFEASIBLE = 'infeasible'
STATUS_MAX_ITER = 'max-iter'
SUPPORTED_ORPF_STATUS = (STATUS_OPTIMAL, STATUS_INFEASIBLE, STATUS_MAX_ITER)

# Flow models
FLOW_LINEARIZED = 'linearized'
FLOW_AC = 'ac'
SUPPORTED_FLOW_MODELS = (FLOW_LINEARIZED, FLOW_AC)

# Controller kinds, also the stevedore driver names
CONTROLLER_INCREMENTAL = 'incremental'
CONTROLLER_NON_INCREMENTAL = 'non_incremental'
CONTROLLER_DROOP_STANDARD = 'droop_standard'
CONTROLLER_DROOP_OPTIMIZED = 'droop_optimized'
CONTROLLER_NONE = 'none'
SUPPORTED_CONTROLLERS = (CONTROLLER_INCREMENTAL, CONTROLLER_NON_INCREMENTAL,
                         CONTROLLER_DROOP_STANDARD, CONTROLLER_DROOP_OPTIMIZED,
                         CONTROLLER_NONE)
LEARNED_CONTROLLERS = (CONTROLLER_INCREMENTAL, CONTROLLER_NON_INCREMENTAL)
DROOP_CONTROLLERS = (CONTROLLER_DROOP_STANDARD, CONTROLLER_DROOP_OPTIMIZED)
EVALUATED_CONTROLLERS = (CONTROLLER_INCREMENTAL, CONTROLLER_DROOP_OPTIMIZED,
                         CONTROLLER_DROOP_STANDARD, CONTROLLER_NONE)
CONTROLLER_NAMESPACE = 'voltvar.controllers'

# Dataset point kinds
POINT_REAL = 'real'
POINT_PSEUDO_LOW = 'pseudo_low'
POINT_PSEUDO_HIGH = 'pseudo_high'
SUPPORTED_POINT_KINDS = (POINT_REAL, POINT_PSEUDO_LOW, POINT_PSEUDO_HIGH)
NO_SCENARIO = -1

PSEUDO_SPACING_UNIFORM = 'uniform'
PSEUDO_SPACING_RANDOM = 'random'
SUPPORTED_PSEUDO_SPACINGS = (PSEUDO_SPACING_UNIFORM, PSEUDO_SPACING_RANDOM)

EPSILON_AUTO = 'auto'
EPSILON_SAFETY = 0.9
SLOPE_LIMIT_NONE = 'none'
SLOPE_LIMIT_AUTO = 'auto'
SLOPE_LIMIT_MARGIN = 0.99

# Non-incremental rule certificate: ||X|| L < sqrt(2) - 1
NON_INCREMENTAL_THRESHOLD = 2 ** 0.5 - 1

# Named sub-seeds
SEED_SCENARIOS = 'scenario-gen'
SEED_REALIZATION = 'realization'
SEED_PSEUDO = 'pseudo-points'
SEED_TRAINING = 'training-der-{}'
SEED_NOISE = 'noise-{}-{}'
SEED_STARTS = 'random-starts'

# Trace verdicts
VERDICT_CONVERGED = 'converged'
VERDICT_OSCILLATING = 'oscillating'
VERDICT_NOT_CONVERGED = 'not_converged'
VERDICT_AC_FAILURE = 'ac_failure'

# Feeder file sections
FEEDER_BUSES = 'buses'
FEEDER_LINES = 'lines'
FEEDER_SHUNTS = 'shunts'
FEEDER_DERS = 'ders'
FEEDER_LIMITS = 'limits'
FEEDER_BASE = 'base'
FEEDER_REQUIRED_SECTIONS = (FEEDER_BUSES, FEEDER_LINES, FEEDER_DERS,
                            FEEDER_LIMITS)

# Profile columns
PREFIX_P = 'p_'
PREFIX_Q = 'q_'
PREFIX_V = 'v_'
PREFIX_QSTAR = 'qstar_'
PREFIX_VSTAR = 'vstar_'
PREFIX_DER = 'der_'

FUNCTION_SCHEMA_VERSION = 1
FLOAT_FORMAT = '%.17g'

# Run directory layout
DIR_ALPHA = 'alpha_{}'
DIR_DATASETS = 'datasets'
DIR_FUNCTIONS = 'functions'
DIR_TRACES = 'traces'
DIR_SUMMARIES = 'summaries'
DIR_EVALUATION = 'evaluation'
FILE_SKIPPED = 'skipped_scenarios.csv'
FILE_ORPF = 'orpf_solutions.csv'
FILE_REFERENCE = 'reference_solutions.csv'
FILE_DROOP = 'droop_params.csv'
FILE_TRAIN_REPORT = 'train_report.csv'
FILE_BOUND = 'bound.csv'
FILE_RUN_CONFIG = 'run_config.json'
FILE_PROFILES = 'profiles.csv'
FILE_LOSSES = 'losses.csv'
FILE_DISTANCES = 'distances.csv'
FILE_NOISE = 'noise.csv'
FILE_METRICS = 'metrics.prom'
