import logging
import sys
from pathlib import Path

from phfit.common.decorators import log_errors
from phfit.common.exceptions import (
    DocumentError,
    FitFailedError,
    InvalidConfigError,
    InvalidTargetError,
    UnstableQueueError,
)
from phfit.optimizer.models import FitConfig
from phfit.reparam.models import StructureChoices
from phfit.utils.documents import load_data, validate_document

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ABOVE_THRESHOLD = 1
EXIT_INVALID_INPUT = 2
EXIT_FIT_FAILED = 3
EXIT_UNSTABLE = 4

# checked in order; the first matching class decides the exit code
EXIT_CODES = (
    (DocumentError, EXIT_INVALID_INPUT),
    (InvalidTargetError, EXIT_INVALID_INPUT),
    (InvalidConfigError, EXIT_INVALID_INPUT),
    (FitFailedError, EXIT_FIT_FAILED),
    (UnstableQueueError, EXIT_UNSTABLE),
)

# FitConfig field for every optimizer override flag
CONFIG_FLAGS = {
    "structure": "structure",
    "n": "n",
    "blocks": "blocks",
    "population": "population",
    "max_epochs": "max_epochs",
    "epsilon": "epsilon",
    "step_size": "step_size",
    "seed": "seed",
    "workers": "workers",
}


class BaseCommand:
    """
    A phfit subcommand. Subclasses set `help`, declare their flags in
    add_arguments and do the work in handle, returning the exit code.
    """

    help = ""

    def __init__(self, stdout=None, stderr=None):
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr

    def add_arguments(self, parser):
        pass

    def handle(self, **options) -> int:
        raise NotImplementedError("subclasses of BaseCommand must provide a handle() method")

    def execute(self, **options) -> int:
        try:
            return log_errors(self.handle)(**options)
        except tuple(error for error, _ in EXIT_CODES) as e:
            code = next(code for error, code in EXIT_CODES if isinstance(e, error))
            self.stderr.write(f"error: {e}\n")
            return code

    def output_dir(self, options) -> Path:
        directory = Path(options["output_dir"])
        directory.mkdir(parents=True, exist_ok=True)
        return directory


def add_config_arguments(parser):
    """Optimizer flags shared by every command that runs fits."""
    group = parser.add_argument_group("optimizer")
    group.add_argument("--config", help="FitConfig JSON document; flags below override it")
    group.add_argument("--structure", choices=[choice.value for choice in StructureChoices])
    group.add_argument("--n", type=int, help="Phase count")
    group.add_argument("--blocks", type=int, nargs="+", help="Hyper-Erlang block sizes")
    group.add_argument("--population", type=int, help="Initial population size")
    group.add_argument("--max-epochs", type=int)
    group.add_argument("--epsilon", type=float, help="Stop once the best loss is below")
    group.add_argument("--step-size", type=float, help="Adam step size")
    group.add_argument("--seed", type=int)
    group.add_argument("--workers", type=int, help="Worker thread cap")


def config_data(options) -> dict:
    """FitConfig fields from the --config document with flag overrides, unvalidated."""
    data = load_data(options["config"]) if options.get("config") else {}
    if not isinstance(data, dict):
        raise DocumentError(options["config"], ["expected a JSON object"])
    for flag, field in CONFIG_FLAGS.items():
        if options.get(flag) is not None:
            data[field] = options[flag]
    # an order given on its own replaces the document's block layout and vice versa
    if options.get("blocks") is not None and options.get("n") is None:
        data.pop("n", None)
    if options.get("n") is not None and options.get("blocks") is None:
        data.pop("blocks", None)
    return data


def build_config(options) -> FitConfig:
    source = options.get("config") or "<arguments>"
    return validate_document(config_data(options), FitConfig, source)
