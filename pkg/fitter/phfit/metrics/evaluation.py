import logging
import time

from phfit.common.exceptions import InvalidConfigError, PhFitError
from phfit.core.distribution import moments
from phfit.objective.models import FitTarget
from phfit.optimizer.models import FitConfig
from phfit.optimizer.services.fit_manager import fit
from phfit.sampler.models import SampledInstance

from .models import EvalRecord, GridCell

logger = logging.getLogger(__name__)


def cell_config(settings: dict, cell: GridCell) -> FitConfig:
    """Optimizer settings shared by the run, with the cell's structure and order."""
    data = {**settings, "structure": cell.structure, "n": cell.n, "blocks": cell.blocks}
    return FitConfig.model_validate(data)


def evaluate_instance(instance: SampledInstance, cell: GridCell, settings: dict) -> EvalRecord:
    """Fit the first cell.l moments of one instance; failures become records with an error."""
    target = instance.moments[: cell.l]
    fields = dict(
        instance_id=instance.id,
        family=instance.family,
        structure=cell.structure,
        n=cell.n or sum(cell.blocks or ()),
        l=cell.l,
        target=target,
    )
    start = time.perf_counter()
    try:
        if cell.l > instance.moments.shape[0]:
            raise InvalidConfigError(
                f"cell fits {cell.l} moments but {instance.id} carries {instance.moments.shape[0]}"
            )
        result = fit(FitTarget(moments=target), cell_config(settings, cell))
    except (PhFitError, ValueError) as e:
        logger.warning(f"Fit of {instance.id} failed: {e}")
        return EvalRecord(**fields, wall_time=time.perf_counter() - start, error=str(e))

    return EvalRecord(
        **fields,
        fitted=moments(result.ph, cell.l),
        per_moment_mape=result.per_moment_mape,
        max_mape=result.max_mape,
        wall_time=result.wall_time,
    )


def run_evaluation(
    instances: list[SampledInstance], cells: list[GridCell], settings: dict | None = None
) -> list[EvalRecord]:
    """
    One record per (instance, cell), ordered by cell then instance.

    Args:
        - instances (list): test-set instances, usually from load_testset
        - cells (list[GridCell]): structure, order and moment count per cell
        - settings (dict, optional): FitConfig fields applied to every cell
    """
    settings = settings or {}
    records = []
    for cell in cells:
        logger.info(
            f"Evaluating {len(instances)} instances with {cell.structure} "
            f"n={cell.n} blocks={cell.blocks} l={cell.l}"
        )
        records.extend(evaluate_instance(instance, cell, settings) for instance in instances)
    return records
