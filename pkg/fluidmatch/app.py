#!/usr/bin/env python3
import argparse
import sys

import fluidmatch
from fluidmatch.application.context import ctx
from fluidmatch.application.exceptions import ConfigurationException, FluidmatchException

SUITES = ['invariants', 'markov', 'extreme-points', 'convergence']

parser = argparse.ArgumentParser(
    prog='fluidmatch',
    description='Fluid-optimal matching rates and discrete-review matching policies for two-sided platforms',
    formatter_class=argparse.ArgumentDefaultsHelpFormatter
)
parser.add_argument(
    '--version',
    action='version', version='fluidmatch %s' % fluidmatch.__version__
)
common = argparse.ArgumentParser(add_help=False)
common.add_argument(
    '--config',
    action='store', dest='config', default=None,
    help='Experiment config (JSON)'
)
common.add_argument(
    '--seed',
    action='store', dest='seed', default=None, type=int,
    help='Base seed, replication r runs with seed+r (env: FLUIDMATCH_SEED)'
)
common.add_argument(
    '--out',
    action='store', dest='out', default=None,
    help='CSV output path (default: stdout)'
)
common.add_argument(
    '--jobs',
    action='store', dest='jobs', default=None, type=int,
    help='Sweep worker processes (env: FLUIDMATCH_JOBS, default: hardware parallelism)'
)
common.add_argument(
    '--db',
    action='store', dest='db', default=None,
    help='Also store sweep rows in this SQLite file'
)
common.add_argument(
    '--cell-timeout',
    action='store', dest='cell_timeout', default=None, type=int,
    help='Seconds before a sweep run is abandoned'
)
common.add_argument(
    '--quiet',
    action='store_const', const=True, dest='quiet', default=None,
    help='Only log warnings and errors'
)
common.add_argument(
    '--debug',
    action='store_const', const=True, dest='debug', default=None,
    help='Enable debug logging'
)
commands = parser.add_subparsers(dest='experiment', metavar='command')
commands.required = True
commands.add_parser('solve', parents=[common], help='Solve the matching problem')
commands.add_parser('priority-sets', parents=[common], help='Build the priority sets of the optimal vertex')
commands.add_parser('simulate', parents=[common], help='Simulate the discrete-review policies')
commands.add_parser('sweep', parents=[common], help='Run a parameter sweep in parallel')
validate = commands.add_parser('validate', parents=[common], help='Run an oracle suite')
validate.add_argument('suite', choices=SUITES)


def load_config(args):
    from fluidmatch.application import schema
    if args.config:
        cfg = schema.load(args.config)
    elif args.experiment == 'validate':
        cfg = schema.ExperimentConfig()
    else:
        raise ConfigurationException('%s needs --config' % args.experiment)
    return cfg.with_overrides(
        experiment=args.experiment,
        suite=getattr(args, 'suite', None),
        seed=ctx.explicit('seed'),
        out=ctx.explicit('out')
    )


def main(argv=None) -> int:
    args = parser.parse_args(argv)
    ctx.load_args(args)
    from fluidmatch.application.logging_factory import Logger
    try:
        cfg = load_config(args)
        from fluidmatch.main import run_experiment
        Logger.cli.debug('Arguments: %s', args)
        return run_experiment(cfg, ctx)
    except ConfigurationException as e:
        sys.stderr.write('fluidmatch: configuration error: %s\n' % e)
        return 2
    except FluidmatchException as e:
        Logger.cli.debug('failure', exc_info=True)
        sys.stderr.write('fluidmatch: %s: %s\n' % (type(e).__name__, e))
        return 1


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main())
