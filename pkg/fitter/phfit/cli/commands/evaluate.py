from phfit.common.exceptions import DocumentError
from phfit.metrics.evaluation import run_evaluation
from phfit.metrics.models import EvalGrid, GridCell
from phfit.metrics.report import evaluation_table, summarize
from phfit.sampler.archive import load_testset
from phfit.utils.documents import load_document, validate_document
from phfit.utils.tables import write_table

from .base import EXIT_OK, BaseCommand, add_config_arguments, config_data

RECORDS_FILE = "records.csv"
REPORT_FILE = "report.csv"


class EvalCommand(BaseCommand):
    help = "Fit every test-set instance in every grid cell and report success rates"

    def add_arguments(self, parser):
        parser.add_argument("archive", help="Test-set archive directory written by `sample`")
        parser.add_argument("--grid", help="EvalGrid JSON document listing the cells")
        parser.add_argument(
            "--moments",
            type=int,
            nargs="+",
            help="Moment counts; with --structure and --n or --blocks, one cell per count",
        )
        add_config_arguments(parser)
        parser.add_argument("--output-dir", default=".", help="Where the report tables go")

    def cells(self, options) -> list[GridCell]:
        if options.get("grid"):
            return load_document(options["grid"], EvalGrid).cells
        if not options.get("moments") or not options.get("structure"):
            raise DocumentError("<arguments>", ["pass --grid, or --structure with --moments"])
        cells = [
            {
                "structure": options["structure"],
                "n": options.get("n"),
                "blocks": options.get("blocks"),
                "l": count,
            }
            for count in options["moments"]
        ]
        return validate_document({"cells": cells}, EvalGrid).cells

    def handle(self, **options) -> int:
        instances, _ = load_testset(options["archive"])
        cells = self.cells(options)
        settings = config_data(options)
        for field in ["structure", "n", "blocks"]:
            settings.pop(field, None)

        records = run_evaluation(instances, cells, settings)
        table = evaluation_table(records)
        report = summarize(table)

        directory = self.output_dir(options)
        write_table(table, directory / RECORDS_FILE)
        write_table(report, directory / REPORT_FILE)
        self.stdout.write(report.to_string(index=False) + "\n")
        return EXIT_OK
