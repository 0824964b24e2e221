from phfit.sampler.archive import write_testset
from phfit.sampler.generators import generate_testset
from phfit.sampler.models import SampleSpec
from phfit.utils.documents import load_data, validate_document

from .base import EXIT_OK, BaseCommand


class SampleCommand(BaseCommand):
    help = "Sample a mean-normalized PH test set and write it as an archive"

    def add_arguments(self, parser):
        parser.add_argument("spec", help="SampleSpec JSON document")
        parser.add_argument("--seed", type=int, help="Override the document's seed")
        parser.add_argument("--workers", type=int, default=1, help="Sampling threads")
        parser.add_argument("--output-dir", default="testset", help="Archive directory")

    def handle(self, **options) -> int:
        data = load_data(options["spec"])
        if options.get("seed") is not None and isinstance(data, dict):
            data["seed"] = options["seed"]
        spec = validate_document(data, SampleSpec, options["spec"])

        instances = generate_testset(spec, workers=options["workers"])
        directory = write_testset(instances, spec, options["output_dir"])
        self.stdout.write(f"{len(instances)} {spec.family} instances written to {directory}\n")
        return EXIT_OK
