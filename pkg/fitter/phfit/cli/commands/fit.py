import logging

import pandas as pd

from phfit.core.distribution import moments
from phfit.objective.models import FitTarget
from phfit.optimizer.models import FitResult
from phfit.optimizer.services.fit_manager import fit
from phfit.utils.documents import dump_document, load_document, validate_document
from phfit.utils.tables import write_table

from .base import EXIT_ABOVE_THRESHOLD, EXIT_OK, BaseCommand, add_config_arguments, build_config

logger = logging.getLogger(__name__)

RESULT_FILE = "result.json"
PH_FILE = "ph.json"
MAPE_FILE = "mape.csv"
SUMMARY_FILE = "summary.csv"


class FitCommand(BaseCommand):
    help = "Fit a PH distribution to a moment target"

    def add_arguments(self, parser):
        parser.add_argument("target", help="FitTarget JSON document")
        self.add_common_arguments(parser)

    def add_common_arguments(self, parser):
        add_config_arguments(parser)
        parser.add_argument(
            "--eta",
            type=float,
            default=1.0,
            help="Max per-moment MAPE in percent for a successful fit (default: 1.0)",
        )
        parser.add_argument("--Q", type=float, help="Override the target's CDF trade-off")
        parser.add_argument("--output-dir", default=".", help="Where result files are written")

    def load_target(self, options) -> FitTarget:
        target = load_document(options["target"], FitTarget)
        if options.get("Q") is not None:
            data = {**target.model_dump(), "Q": options["Q"]}
            target = validate_document(data, FitTarget)
        return target

    def summary(self, result: FitResult, options) -> dict:
        return {
            "max_mape": result.max_mape,
            "final_loss": result.final_loss,
            "epochs_run": result.epochs_run,
            "candidates_evaluated": result.candidates_evaluated,
            "wall_time": result.wall_time,
            "stop_reason": result.stop_reason,
        }

    def handle(self, **options) -> int:
        target = self.load_target(options)
        config = build_config(options)
        result = fit(target, config)

        directory = self.output_dir(options)
        dump_document(result, directory / RESULT_FILE)
        dump_document(result.ph, directory / PH_FILE)
        fitted = moments(result.ph, target.count)
        table = pd.DataFrame(
            {
                "i": range(1, target.count + 1),
                "target": target.moments,
                "fitted": fitted,
                "mape": result.per_moment_mape,
            }
        )
        write_table(table, directory / MAPE_FILE)
        summary = self.summary(result, options)
        write_table(pd.DataFrame([summary]), directory / SUMMARY_FILE)

        self.stdout.write(" ".join(f"{key}={value}" for key, value in summary.items()) + "\n")
        if result.max_mape > options["eta"]:
            logger.warning(
                f"Max MAPE {result.max_mape:.4g}% is above the threshold {options['eta']}%"
            )
            return EXIT_ABOVE_THRESHOLD
        return EXIT_OK
