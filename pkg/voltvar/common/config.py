# Copyright 2024 Grid Control Lab
# All Rights Reserved.
#
#    Licensed under the Apache License, Version 2.0 (the "License"); you may
#    not use this file except in compliance with the License. You may obtain
#    a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0
#
#    Unless required by applicable law or agreed to in writing, software
#    distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
#    WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
#    License for the specific language governing permissions and limitations
#    under the License.

"""
Routines for configuring the Volt/Var laboratory
"""

import os
import sys

from oslo_config import cfg
from oslo_log import log as logging

from voltvar.common import constants
from voltvar.utils import exceptions

LOG = logging.getLogger(__name__)

_BUNDLED_ETC = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'etc')
BUNDLED_FEEDER = os.path.join(_BUNDLED_ETC, 'feeders', 'feeder37.json')


def init(args, **kwargs):
    cfg.CONF(args=args, project=constants.PRODUCT_NAME,
             **kwargs)


def setup_logging(conf):
    """Sets up the logging options for a log with supplied name.

    :param conf: a cfg.ConfOpts object
    """
    product_name = constants.PRODUCT_NAME
    logging.setup(conf, product_name)
    LOG.info("Logging enabled!")
    LOG.debug("command line: %s", " ".join(sys.argv))


def _parse_epsilon(value):
    if value == constants.EPSILON_AUTO:
        return value
    try:
        eps = float(value)
    except ValueError:
        raise exceptions.InvalidParameterError(
            "epsilon must be 'auto' or a number, got {!r}".format(value))
    if not 0.0 < eps <= 1.0:
        raise exceptions.InvalidParameterError(
            "epsilon must lie in (0, 1], got {}".format(eps))
    return eps


def _parse_slope_limit(value):
    if value in (constants.SLOPE_LIMIT_NONE, constants.SLOPE_LIMIT_AUTO):
        return value
    try:
        limit = float(value)
    except ValueError:
        raise exceptions.InvalidParameterError(
            "slope_limit must be 'none', 'auto' or a number, "
            "got {!r}".format(value))
    if limit <= 0.0:
        raise exceptions.InvalidParameterError(
            "slope_limit must be positive, got {}".format(limit))
    return limit


run_opts = [
    cfg.StrOpt('feeder_file', default=BUNDLED_FEEDER,
               help="Feeder description (JSON with buses, lines, shunts, "
                    "ders and limits sections)."),
    cfg.StrOpt('profiles_file', default=None,
               help="Per-bus scenario profiles CSV. When unset, synthetic "
                    "daily profiles are generated from the feeder."),
    cfg.IntOpt('workers', default=4, min=1,
               help="Size of the worker pool for scenario and per-DER "
                    "parallelism."),
    cfg.StrOpt('prometheus_textfile', default=None,
               help="Write prometheus metrics in textfile-collector format "
                    "to this path at the end of each command."),
]

cli_opts = [
    cfg.StrOpt('out', default='voltvar-run',
               help="Output directory of the run."),
    cfg.IntOpt('seed', default=0, min=0,
               help="Top-level seed, all randomness derives from it."),
    cfg.FloatOpt('alpha', default=0.5, min=0.0, max=1.0,
                 help="Trade-off between voltage deviation (1) and power "
                      "losses (0) in the ORPF cost."),
    cfg.StrOpt('epsilon', default=constants.EPSILON_AUTO,
               help="Controller stepsize in (0, 1], or 'auto' for 0.9 "
                    "times the stability bound."),
    cfg.FloatOpt('noise', default=0.0, min=0.0,
                 help="Relative voltage measurement noise level."),
    cfg.StrOpt('controller', default=constants.CONTROLLER_INCREMENTAL,
               choices=constants.SUPPORTED_CONTROLLERS,
               help="Controller kind used by the simulate command."),
]

power_flow_opts = [
    cfg.FloatOpt('tolerance', default=1e-10,
                 help="Maximum bus power mismatch for AC convergence."),
    cfg.IntOpt('max_iterations', default=200, min=1,
               help="Iteration cap of the Z-bus fixed point."),
]

orpf_opts = [
    cfg.FloatOpt('tolerance', default=1e-8,
                 help="Primal and dual residual tolerance of the splitting "
                      "method."),
    cfg.IntOpt('max_iterations', default=50000, min=1,
               help="Iteration cap of the splitting method."),
    cfg.FloatOpt('rho', default=1.0,
                 help="Initial penalty parameter."),
    cfg.BoolOpt('adaptive_rho', default=True,
                help="Balance primal and dual residuals by rescaling rho."),
    cfg.FloatOpt('feasibility_tolerance', default=1e-8,
                 help="Minimum total voltage violation above which a "
                      "scenario is declared infeasible."),
]

dataset_opts = [
    cfg.IntOpt('scenario_count', default=1440, min=1,
               help="Number of scenarios K drawn from the base profiles."),
    cfg.FloatOpt('perturbation', default=0.0, min=0.0, max=1.0,
                 help="Uniform multiplicative perturbation of the forecast "
                      "scenarios."),
    cfg.IntOpt('pseudo_low_count', default=700, min=0,
               help="Pseudo points at saturated injection for low "
                    "voltages."),
    cfg.IntOpt('pseudo_high_count', default=700, min=0,
               help="Pseudo points at saturated absorption for high "
                    "voltages."),
    cfg.FloatOpt('pseudo_range_width', default=0.10, min=0.0,
                 help="Width in p.u. of the pseudo voltage ranges beyond "
                      "the voltage limits."),
    cfg.StrOpt('pseudo_spacing', default=constants.PSEUDO_SPACING_UNIFORM,
               choices=constants.SUPPORTED_PSEUDO_SPACINGS,
               help="Place pseudo voltages on a uniform grid or sample "
                    "them."),
    cfg.StrOpt('voltage_model', default=constants.FLOW_LINEARIZED,
               choices=constants.SUPPORTED_FLOW_MODELS,
               help="Flow model recording the optimal voltages."),
    cfg.FloatOpt('peak_load_factor', default=1.65, min=0.0,
                 help="Peak demand of synthetic profiles relative to "
                      "nominal load."),
    cfg.IntOpt('profile_steps', default=1440, min=1,
               help="Time steps per synthetic day."),
]

training_opts = [
    cfg.IntOpt('neurons', default=100, min=1,
               help="Hidden neurons H of each equilibrium function."),
    cfg.IntOpt('episodes', default=2000, min=1,
               help="Full-batch optimizer steps."),
    cfg.FloatOpt('learning_rate', default=0.01,
                 help="Initial learning rate."),
    cfg.FloatOpt('decay_rate', default=0.5,
                 help="Multiplicative learning rate decay."),
    cfg.IntOpt('decay_steps', default=500, min=1,
               help="Steps between learning rate decays."),
    cfg.FloatOpt('beta1', default=0.9),
    cfg.FloatOpt('beta2', default=0.999),
    cfg.FloatOpt('adam_epsilon', default=1e-8),
    cfg.StrOpt('slope_limit', default=constants.SLOPE_LIMIT_NONE,
               help="Cap on the function slopes: 'none', 'auto' (certify "
                    "the non-incremental rule) or a number."),
]

control_opts = [
    cfg.IntOpt('iterations', default=120, min=1,
               help="Control iterations per minute scenario."),
    cfg.StrOpt('flow_model', default=constants.FLOW_AC,
               choices=constants.SUPPORTED_FLOW_MODELS,
               help="Flow model closing the control loop."),
    cfg.FloatOpt('convergence_tolerance', default=1e-8,
                 help="Infinity-norm fixed point residual of convergence."),
    cfg.FloatOpt('divergence_threshold', default=1e-3,
                 help="Final residual above which oscillation is "
                      "considered."),
    cfg.FloatOpt('equilibrium_tolerance', default=1e-10,
                 help="Residual of the equilibrium search."),
    cfg.FloatOpt('realization_perturbation', default=0.05, min=0.0,
                 max=1.0,
                 help="Perturbation of the realized day against the "
                      "forecast."),
]

evaluation_opts = [
    cfg.ListOpt('alphas', default=[0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0],
                item_type=cfg.types.Float(min=0.0, max=1.0),
                help="Trade-off weights compared by the evaluate command."),
    cfg.ListOpt('noise_levels', default=[0.0, 0.002, 0.005, 0.01],
                item_type=cfg.types.Float(min=0.0),
                help="Measurement noise levels compared by evaluate."),
    cfg.ListOpt('controllers', default=list(constants.EVALUATED_CONTROLLERS),
                item_type=cfg.types.String(
                    choices=constants.SUPPORTED_CONTROLLERS),
                help="Controller kinds compared by evaluate."),
    cfg.BoolOpt('complete_missing', default=False,
                help="Run the pipeline stages whose artifacts evaluate "
                     "needs but cannot find, instead of failing."),
]

# Register the configuration options
cfg.CONF.register_opts(run_opts)
cfg.CONF.register_cli_opts(cli_opts)
cfg.CONF.register_opts(power_flow_opts, group='power_flow')
cfg.CONF.register_opts(orpf_opts, group='orpf')
cfg.CONF.register_opts(dataset_opts, group='dataset')
cfg.CONF.register_opts(training_opts, group='training')
cfg.CONF.register_opts(control_opts, group='control')
cfg.CONF.register_opts(evaluation_opts, group='evaluation')


def epsilon(conf=None):
    """Configured stepsize: 'auto' or a float in (0, 1]."""
    conf = conf or cfg.CONF
    return _parse_epsilon(conf.epsilon)


def slope_limit(conf=None):
    conf = conf or cfg.CONF
    return _parse_slope_limit(conf.training.slope_limit)


def validate_run_config(conf=None):
    """Check what option types cannot: files exist, values combine."""
    conf = conf or cfg.CONF
    missing = [path for path in (conf.feeder_file, conf.profiles_file)
               if path and not os.path.isfile(path)]
    if missing:
        raise exceptions.MissingArtifactsError(missing)
    epsilon(conf)
    slope_limit(conf)
    for alpha in [conf.alpha] + list(conf.evaluation.alphas):
        if not 0.0 <= alpha <= 1.0:
            raise exceptions.InvalidParameterError(
                "alpha must lie in [0, 1], got {}".format(alpha))
    if not 0.0 < conf.training.decay_rate <= 1.0:
        raise exceptions.InvalidParameterError(
            "decay_rate must lie in (0, 1]")
    if conf.training.learning_rate <= 0.0:
        raise exceptions.InvalidParameterError(
            "learning_rate must be positive")


def effective_options(conf=None):
    """Flatten the registered options into a JSON-serialisable dict."""
    conf = conf or cfg.CONF
    groups = [(None, run_opts + cli_opts), ('power_flow', power_flow_opts),
              ('orpf', orpf_opts), ('dataset', dataset_opts),
              ('training', training_opts), ('control', control_opts),
              ('evaluation', evaluation_opts)]
    result = {}
    for group, opts in groups:
        section = conf if group is None else getattr(conf, group)
        target = result.setdefault(group or 'DEFAULT', {})
        for opt in opts:
            value = getattr(section, opt.dest)
            target[opt.dest] = list(value) if isinstance(value, list) \
                else value
    return result
