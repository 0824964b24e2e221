import logging

import numpy as np
from scipy import integrate

from phfit.common.exceptions import MetricsInputError
from phfit.core.distribution import density_on_grid, quantile
from phfit.core.models import MarkovianPH

from .models import EvalRecord, QuadratureSpec

logger = logging.getLogger(__name__)


def mape(target, fitted) -> np.ndarray:
    """Per-moment absolute percentage error |m_i - fitted_i| / m_i * 100."""
    target = np.asarray(target, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    if target.shape != fitted.shape:
        raise MetricsInputError(
            f"target has {target.shape[0]} moments but fitted has {fitted.shape[0]}"
        )
    if np.any(target <= 0):
        raise MetricsInputError("target moments must be positive")
    return np.abs(target - fitted) / target * 100.0


def success_rate(records: list[EvalRecord], eta: float) -> float:
    """Percentage of records whose worst moment error is at most eta percent."""
    if not records:
        raise MetricsInputError("success rate of an empty record set")
    accurate = sum(1 for record in records if record.max_mape <= eta)
    return 100.0 * accurate / len(records)


def accumulated_error(p, p_hat, j: int) -> float:
    """sum_{i <= j} |p_i - p_hat_i|."""
    p = np.asarray(p, dtype=float)
    p_hat = np.asarray(p_hat, dtype=float)
    if j < 0 or j >= min(p.shape[0], p_hat.shape[0]):
        raise MetricsInputError(
            f"index {j} out of range for sequences of length {p.shape[0]} and {p_hat.shape[0]}"
        )
    return float(np.sum(np.abs(p[: j + 1] - p_hat[: j + 1])))


def accumulated_errors(p, p_hat) -> np.ndarray:
    """accumulated_error for every j at once."""
    p = np.asarray(p, dtype=float)
    p_hat = np.asarray(p_hat, dtype=float)
    if p.shape != p_hat.shape:
        raise MetricsInputError("queue-length sequences must have equal lengths")
    return np.cumsum(np.abs(p - p_hat))


def kl_divergence(p: MarkovianPH, q: MarkovianPH, grid: QuadratureSpec | None = None) -> float:
    """
    Numeric KL(p || q) = integral of f_p log(f_p / f_q), by composite Simpson on
    [0, x_max]. Unless the grid fixes it, x_max is the larger of the two
    distributions' quantiles at grid.level.
    """
    grid = grid or QuadratureSpec()
    panels = grid.panels + grid.panels % 2
    x_max = grid.x_max or max(quantile(p, grid.level), quantile(q, grid.level))

    xs, f_p = density_on_grid(p, x_max, panels)
    _, f_q = density_on_grid(q, x_max, panels)
    f_p = np.maximum(f_p, grid.floor)
    f_q = np.maximum(f_q, grid.floor)
    value = float(integrate.simpson(f_p * np.log(f_p / f_q), x=xs))
    logger.debug(f"KL divergence {value:.6g} on [0, {x_max:.4g}] with {panels} panels")
    return value
