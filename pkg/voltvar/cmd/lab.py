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
voltvar-lab: learn equilibrium functions and evaluate local Volt/Var
control.

    voltvar-lab [--config PATH] [--out DIR] [--seed N] [--alpha A]
                [--epsilon E] [--noise D] [--controller KIND] COMMAND

COMMAND is one of build-dataset, train, bound, simulate, evaluate.
"""

import sys

from oslo_config import cfg
from oslo_log import log as logging

from voltvar.common import config
from voltvar.common import constants
from voltvar.db import api as db_api
from voltvar.db import repositories
from voltvar.utils import exceptions
from voltvar.worker import experiment

CONF = cfg.CONF
LOG = logging.getLogger(__name__)


def cmd_build_dataset(worker):
    alpha = CONF.alpha
    try:
        datasets, skip_log = worker.build_dataset(alpha)
    except exceptions.EmptyDatasetError:
        print("No feasible scenario at alpha {}, see {}".format(
            db_api.format_value(alpha), worker.run_dir.alpha_path(
                alpha, constants.FILE_SKIPPED)))
        raise
    real = datasets[0].counts[0]
    print("alpha {}: {} datasets, K_eff = {}, skipped = {}, points per "
          "DER = {}".format(db_api.format_value(alpha), len(datasets), real,
                            len(skip_log), len(datasets[0])))


def cmd_train(worker):
    report = worker.train(CONF.alpha)
    print(report[['der_bus', 'mse', 'mse_real', 'lipschitz']].to_string(
        index=False))
    print("L = {:.6g}, stepsize bound = {:.6g}".format(
        report['global_lipschitz'].iloc[0],
        report['stepsize_bound'].iloc[0]))


def cmd_bound(worker):
    report = worker.bound(CONF.alpha)
    for key in sorted(report):
        print("{} = {}".format(key, report[key]))


def cmd_simulate(worker):
    summary = worker.simulate(CONF.alpha, CONF.controller, CONF.noise)
    for key in sorted(summary):
        print("{} = {}".format(key, summary[key]))


def cmd_evaluate(worker):
    losses, distances, noise = worker.evaluate()
    for title, frame in (("average loss", losses),
                         ("average distance", distances),
                         ("average distance under noise", noise)):
        print(title)
        print(frame.to_string())


COMMANDS = {
    'build-dataset': cmd_build_dataset,
    'train': cmd_train,
    'bound': cmd_bound,
    'simulate': cmd_simulate,
    'evaluate': cmd_evaluate,
}


def add_command_parsers(subparsers):
    for name, func in sorted(COMMANDS.items()):
        parser = subparsers.add_parser(name)
        parser.set_defaults(func=func)


command_opt = cfg.SubCommandOpt('command', title='Commands',
                                help='Pipeline stage to run',
                                handler=add_command_parsers)


def _translate_args(argv):
    """Accept --config for --config-file; the command goes last."""
    args = []
    for arg in argv:
        if arg == '--config':
            arg = '--config-file'
        elif arg.startswith('--config='):
            arg = '--config-file=' + arg[len('--config='):]
        args.append(arg)
    commands = [a for a in args if a in COMMANDS]
    if commands:
        args.remove(commands[0])
        args.append(commands[0])
    return args


def main(argv=None):
    """Run one pipeline command and return its exit code."""
    argv = sys.argv[1:] if argv is None else argv
    CONF.register_cli_opt(command_opt)
    logging.register_options(CONF)
    try:
        config.init(_translate_args(argv))
    except (cfg.Error, ValueError) as err:
        print("Error: {}".format(err), file=sys.stderr)
        return exceptions.EXIT_CONFIG
    logging.set_defaults()
    config.setup_logging(CONF)
    CONF.log_opt_values(LOG, logging.DEBUG)

    worker = None
    try:
        config.validate_run_config(CONF)
        worker = experiment.ExperimentWorker(CONF)
        repositories.RunConfigRepository(worker.run_dir).create(
            config.effective_options(CONF), CONF.config_file)
        CONF.command.func(worker)
    except exceptions.VoltVarException as err:
        LOG.error("%s failed: %s", CONF.command.name, err)
        print("Error: {}".format(err), file=sys.stderr)
        return err.exit_code
    except Exception:
        LOG.exception("%s failed with an unexpected error",
                      CONF.command.name)
        return exceptions.EXIT_NUMERICAL
    finally:
        if worker is not None:
            worker.write_metrics()
            worker.shutdown()
    return exceptions.EXIT_OK
