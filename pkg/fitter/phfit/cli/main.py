"""
phfit command line.

    phfit fit target.json --structure coxian --n 4
    phfit shape-fit --reference data/shape_example/reference.json --percentiles 20
    phfit sample spec.json --output-dir testset
    phfit eval testset --grid grid.json
    phfit queue --arrival arrival.json --service service.json --moments 2 3 4 5

Data goes to files under --output-dir; logs and progress lines go to stderr.
"""

import argparse
import importlib
import logging
import sys

import rollbar
from dotenv import load_dotenv

from phfit import settings

from .commands.base import EXIT_INVALID_INPUT
from .commands.evaluate import EvalCommand
from .commands.fit import FitCommand
from .commands.queue import QueueCommand
from .commands.sample import SampleCommand
from .commands.shape_fit import ShapeFitCommand

logger = logging.getLogger(__name__)

COMMANDS = {
    "fit": FitCommand,
    "shape-fit": ShapeFitCommand,
    "sample": SampleCommand,
    "eval": EvalCommand,
    "queue": QueueCommand,
}


def build_parser(commands) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phfit", description=__doc__.splitlines()[1])
    parser.add_argument("--env-file", help="Load environment variables from this file first")
    parser.add_argument("--log-level", help="Override LOG_LEVEL for this run")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, command in commands.items():
        subparser = subparsers.add_parser(name, help=command.help, description=command.help)
        command.add_arguments(subparser)
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    commands = {name: command(stdout=stdout, stderr=stderr) for name, command in COMMANDS.items()}
    parser = build_parser(commands)
    try:
        options = vars(parser.parse_args(argv))
    except SystemExit as e:
        return EXIT_INVALID_INPUT if e.code else 0

    env_file = options.pop("env_file", None)
    if env_file:
        load_dotenv(env_file, override=True)
        importlib.reload(settings)
    settings.configure_logging(options.pop("log_level", None))
    if settings.ROLLBAR_ACCESS_TOKEN:
        rollbar.init(**settings.ROLLBAR)

    command = commands[options.pop("command")]
    return command.execute(**options)


if __name__ == "__main__":
    sys.exit(main())
