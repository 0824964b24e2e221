import logging

from phfit.core.models import MarkovianPH
from phfit.qbd.study import DEFAULT_K_MAX, queue_study
from phfit.utils.documents import load_document
from phfit.utils.tables import write_table

from .base import EXIT_OK, BaseCommand, add_config_arguments, build_config

logger = logging.getLogger(__name__)

PMF_FILE = "pmf.csv"
ERRORS_FILE = "accumulated_error.csv"


class QueueCommand(BaseCommand):
    help = "Compare the PH/PH/1 queue-length distribution of true and moment-fitted PHs"

    def add_arguments(self, parser):
        parser.add_argument("--arrival", required=True, help="Inter-arrival PH document")
        parser.add_argument("--service", required=True, help="Service time PH document")
        parser.add_argument(
            "--moments",
            type=int,
            nargs="+",
            default=[2, 3, 4, 5],
            help="Moment counts fitted per column (default: 2 3 4 5)",
        )
        parser.add_argument(
            "--k-max", type=int, default=DEFAULT_K_MAX, help="Largest queue length reported"
        )
        add_config_arguments(parser)
        parser.add_argument("--output-dir", default=".", help="Where the tables go")

    def handle(self, **options) -> int:
        arrival = load_document(options["arrival"], MarkovianPH)
        service = load_document(options["service"], MarkovianPH)
        config = build_config(options)

        study = queue_study(
            arrival,
            service,
            options["moments"],
            config,
            k_max=options["k_max"],
            workers=config.workers,
        )
        directory = self.output_dir(options)
        write_table(study.pmf, directory / PMF_FILE)
        write_table(study.errors, directory / ERRORS_FILE)

        for count, message in sorted(study.failures.items()):
            self.stderr.write(f"l={count}: {message}\n")
        self.stdout.write(f"rho={study.rho:.6g} cells={len(options['moments'])}\n")
        return EXIT_OK
