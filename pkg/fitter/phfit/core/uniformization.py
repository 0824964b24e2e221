"""
Action of the matrix exponential of a subgenerator on a vector, by uniformization.

    exp(T x) v = sum_k Poisson(k; q x) P^k v,   P = I + T / q,   q = max_i |T_ii|

P is nonnegative and substochastic, so every P^k v is bounded by max|v| and the
series truncation error is the Poisson tail mass times max|v|.
"""

import logging

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-12


def truncation_point(mu: float, tolerance: float) -> int:
    """Smallest K with Poisson(mu) tail mass beyond K below tolerance."""
    return int(stats.poisson.isf(tolerance, mu)) + 1


def expm_action(
    T: np.ndarray, x: float, v: np.ndarray, tolerance: float = DEFAULT_TOLERANCE
) -> np.ndarray:
    """
    Compute exp(T x) @ v without forming exp(T x).

    Args:
        T: subgenerator (n x n)
        x: nonnegative time
        v: vector (n,) or block of column vectors (n, m)
        tolerance: absolute error bound on the result
    """
    v = np.asarray(v, dtype=float)
    q = float(np.max(-np.diag(T)))
    if x == 0 or q <= 0:
        return v.copy()

    mu = q * x
    scale = max(1.0, float(np.max(np.abs(v))))
    last = truncation_point(mu, tolerance / scale)
    weights = stats.poisson.pmf(np.arange(last + 1), mu)

    P = np.eye(T.shape[0]) + T / q
    term = v.copy()
    result = weights[0] * term
    for k in range(1, last + 1):
        term = P @ term
        result += weights[k] * term
    return result
