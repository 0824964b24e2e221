import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from phfit.common.exceptions import PhFitError
from phfit.core.models import MarkovianPH
from phfit.metrics.scores import accumulated_errors
from phfit.objective.loss import target_from_ph
from phfit.objective.models import FitTarget
from phfit.optimizer.models import FitConfig
from phfit.optimizer.services.fit_manager import fit

from .models import QbdModel
from .solver import stationary_pmf

logger = logging.getLogger(__name__)

DEFAULT_K_MAX = 100

Fitter = Callable[[FitTarget, FitConfig], MarkovianPH]


def fit_ph(target: FitTarget, config: FitConfig) -> MarkovianPH:
    return fit(target, config).ph


def pmf_column(count: int) -> str:
    return f"p_hat_l{count}"


def error_column(count: int) -> str:
    return f"accerr_l{count}"


class QueueStudy(BaseModel):
    """Stationary PMFs of the true and fitted queues and their accumulated errors."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rho: float
    pmf: pd.DataFrame
    errors: pd.DataFrame
    failures: dict[int, str] = {}


def _study_cell(
    count: int,
    arrival: MarkovianPH,
    service: MarkovianPH,
    config: FitConfig,
    k_max: int,
    fitter: Fitter,
) -> np.ndarray:
    fitted_arrival = fitter(target_from_ph(arrival, count, Q=0.0), config)
    fitted_service = fitter(target_from_ph(service, count, Q=0.0), config)
    model = QbdModel(arrival=fitted_arrival, service=fitted_service)
    logger.info(f"l={count}: fitted utilization {model.rho:.6f}")
    return stationary_pmf(model, k_max)


def queue_study(
    true_arrival: MarkovianPH,
    true_service: MarkovianPH,
    l_values,
    config: FitConfig,
    k_max: int = DEFAULT_K_MAX,
    fitter: Fitter | None = None,
    workers: int = 1,
) -> QueueStudy:
    """
    Fit both PHs to their first l moments for every l, solve the fitted queues and
    compare against the true stationary PMF.

    A failing cell leaves NaN columns and an entry in `failures`; the true queue
    must be stable.

    Args:
        - l_values (list[int]): moment counts, one column pair per value
        - config (FitConfig): optimizer settings shared by all fits
        - fitter: maps (target, config) to a PH; the multi-start optimizer by default
        - workers (int): cells solved concurrently
    """
    fitter = fitter or fit_ph
    truth = QbdModel(arrival=true_arrival, service=true_service)
    p_true = stationary_pmf(truth, k_max)

    pmf = pd.DataFrame({"k": np.arange(k_max + 1), "p_true": p_true})
    errors = pd.DataFrame({"j": np.arange(k_max + 1)})
    failures = {}

    def run(count):
        try:
            return _study_cell(count, true_arrival, true_service, config, k_max, fitter)
        except PhFitError as e:
            logger.warning(f"Queue study cell l={count} failed: {e}")
            failures[count] = str(e)
            return np.full(k_max + 1, np.nan)

    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="phfit-queue") as pool:
        columns = list(pool.map(run, l_values))

    for count, p_hat in zip(l_values, columns):
        pmf[pmf_column(count)] = p_hat
        errors[error_column(count)] = accumulated_errors(p_true, p_hat)

    return QueueStudy(rho=truth.rho, pmf=pmf, errors=errors, failures=failures)
