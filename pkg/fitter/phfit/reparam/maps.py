"""
Forward maps from the unconstrained parameterizations onto Markovian PH form, and
their right-inverses on interior points.

General:       alpha = softmax(a),  T = diag(gamma^2) [softmax(Z) - (I + softmax(Z) o I)]
Coxian:        lambda = gamma^2,    p = sigmoid(u)
Hyper-Erlang:  omega = softmax(beta), lambda = delta^2
"""

import logging

import numpy as np

from phfit.common.exceptions import InteriorViolationError
from phfit.core.models import MarkovianPH
from phfit.utils.numerics import logit, sigmoid, softmax

from .models import CoxianParams, GeneralParams, HyperErlangParams

logger = logging.getLogger(__name__)


def block_heads(blocks) -> np.ndarray:
    """Zero-based index of the first phase of each Erlang block."""
    return np.concatenate([[0], np.cumsum(blocks)[:-1]]).astype(int)


def coxian_ph(rates, probabilities) -> MarkovianPH:
    rates = np.asarray(rates, dtype=float)
    n = rates.shape[0]
    T = -np.diag(rates) + np.diag(np.asarray(probabilities, dtype=float) * rates[:-1], k=1)
    return MarkovianPH(alpha=np.eye(n)[0], T=T)


def hypererlang_ph(weights, rates, blocks) -> MarkovianPH:
    blocks = [int(size) for size in blocks]
    phase_rates = np.repeat(np.asarray(rates, dtype=float), blocks)
    n = phase_rates.shape[0]
    heads = block_heads(blocks)

    alpha = np.zeros(n)
    alpha[heads] = weights
    continues = np.ones(n - 1, dtype=bool)
    continues[heads[1:] - 1] = False
    T = -np.diag(phase_rates) + np.diag(phase_rates[:-1] * continues, k=1)
    return MarkovianPH(alpha=alpha, T=T)


def to_markovian_general(params: GeneralParams) -> MarkovianPH:
    rates = params.gamma**2
    jumps = softmax(params.Z)
    T = rates[:, None] * jumps
    np.fill_diagonal(T, -rates)
    return MarkovianPH(alpha=softmax(params.a), T=T)


def to_markovian_coxian(params: CoxianParams) -> MarkovianPH:
    return coxian_ph(params.gamma**2, sigmoid(params.u))


def to_markovian_hypererlang(params: HyperErlangParams) -> MarkovianPH:
    return hypererlang_ph(softmax(params.beta), params.delta**2, params.blocks)


def to_markovian(params) -> MarkovianPH:
    if isinstance(params, GeneralParams):
        return to_markovian_general(params)
    if isinstance(params, CoxianParams):
        return to_markovian_coxian(params)
    return to_markovian_hypererlang(params)


def _require_positive(values: np.ndarray, field: str) -> None:
    bad = np.argwhere(~(values > 0))
    if bad.size:
        index = tuple(int(i) for i in bad[0])
        raise InteriorViolationError(
            f"{field}{list(index)} = {values[index]!r} is on the boundary; "
            "the right-inverse needs strictly positive entries",
            field=field,
            index=index,
        )


def from_markovian_general(ph: MarkovianPH) -> GeneralParams:
    """
    Right-inverse of the general map on PHs with no zero entries.

    The diagonal of the jump-proportion matrix carries the exit share
    -rowsum(T)_i / gamma_i^2, so exit rates must be positive too.
    """
    off_diagonal = ~np.eye(ph.n, dtype=bool)
    _require_positive(ph.alpha, "alpha")
    masked = np.where(off_diagonal, ph.T, 1.0)
    _require_positive(masked, "T")
    _require_positive(ph.exit_vector, "exit")

    rates = -np.diag(ph.T)
    proportions = ph.T / rates[:, None]
    np.fill_diagonal(proportions, ph.exit_vector / rates)
    return GeneralParams(a=np.log(ph.alpha), gamma=np.sqrt(rates), Z=np.log(proportions))


def from_markovian_coxian(rates, probabilities) -> CoxianParams:
    rates = np.asarray(rates, dtype=float)
    probabilities = np.asarray(probabilities, dtype=float)
    _require_positive(rates, "lambda")
    _require_positive(probabilities, "p")
    _require_positive(1.0 - probabilities, "1-p")
    return CoxianParams(gamma=np.sqrt(rates), u=logit(probabilities))


def from_markovian_hypererlang(weights, rates, blocks) -> HyperErlangParams:
    weights = np.asarray(weights, dtype=float)
    rates = np.asarray(rates, dtype=float)
    _require_positive(weights, "omega")
    _require_positive(rates, "lambda")
    return HyperErlangParams(
        beta=np.log(weights), delta=np.sqrt(rates), blocks=tuple(int(b) for b in blocks)
    )


def jitter(ph: MarkovianPH, mass: float = 1e-12) -> MarkovianPH:
    """
    Move a boundary PH to a nearby interior point.

    Zero alpha entries get `mass` before renormalizing. Zero off-diagonal rates get
    mass * |T_ii|, and rows left without exit are shrunk so the exit share is `mass`.
    Diagonals are kept.
    """
    alpha = np.where(ph.alpha > 0, ph.alpha, mass)
    alpha = alpha / alpha.sum()

    rates = -np.diag(ph.T)
    off_diagonal = ~np.eye(ph.n, dtype=bool)
    T = np.where(off_diagonal & (ph.T <= 0), mass * rates[:, None], ph.T)
    np.fill_diagonal(T, 0.0)

    outflow = T.sum(axis=1)
    ceiling = (1.0 - mass) * rates
    shrink = np.where(outflow > ceiling, ceiling / np.maximum(outflow, np.finfo(float).tiny), 1.0)
    T = T * shrink[:, None]
    np.fill_diagonal(T, -rates)

    if np.any(shrink < 1.0) or np.any(ph.alpha <= 0):
        logger.debug(f"Jittered boundary PH of order {ph.n} with mass {mass}")
    return MarkovianPH(alpha=alpha, T=T)
