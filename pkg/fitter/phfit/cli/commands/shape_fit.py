from phfit.common.exceptions import DocumentError
from phfit.core.models import MarkovianPH
from phfit.metrics.scores import kl_divergence
from phfit.objective.loss import shape_percentiles, target_from_ph
from phfit.objective.models import DEFAULT_Q, FitTarget
from phfit.optimizer.models import FitResult
from phfit.utils.documents import load_document

from .fit import FitCommand


class ShapeFitCommand(FitCommand):
    help = "Fit moments and CDF points jointly, optionally comparing against a reference PH"

    def add_arguments(self, parser):
        parser.add_argument(
            "target", nargs="?", help="FitTarget JSON document; built from --reference if omitted"
        )
        parser.add_argument("--reference", help="Reference PH document; enables the KL column")
        parser.add_argument(
            "--moments", type=int, default=5, help="Moments taken from the reference (default: 5)"
        )
        parser.add_argument(
            "--percentiles",
            type=int,
            default=0,
            help="Number of CDF percentile points taken from the reference (default: 0)",
        )
        self.add_common_arguments(parser)

    def reference(self, options) -> MarkovianPH | None:
        if not options.get("reference"):
            return None
        return load_document(options["reference"], MarkovianPH)

    def load_target(self, options) -> FitTarget:
        if options.get("target"):
            return super().load_target(options)
        reference = self.reference(options)
        if reference is None:
            raise DocumentError(
                "<arguments>", ["either a target document or --reference is required"]
            )
        Q = DEFAULT_Q if options.get("Q") is None else options["Q"]
        return target_from_ph(
            reference, options["moments"], shape_percentiles(options["percentiles"]), Q=Q
        )

    def summary(self, result: FitResult, options) -> dict:
        summary = super().summary(result, options)
        reference = self.reference(options)
        if reference is not None:
            summary["kl"] = kl_divergence(reference, result.ph)
        return summary
