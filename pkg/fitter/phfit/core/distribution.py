"""
Evaluation of Markovian PH distributions: validity, moments, CDF, PDF, quantiles
and mean normalization.
"""

import logging

import numpy as np
from scipy import linalg, optimize

from phfit.common.exceptions import InvalidTargetError, SingularMatrixError

from .models import VALIDATION_TOLERANCE, MarkovianPH, MomentStatistics, Violation
from .uniformization import expm_action

logger = logging.getLogger(__name__)

PIVOT_THRESHOLD = 1e-14


def exponential(rate: float) -> MarkovianPH:
    return MarkovianPH(alpha=[1.0], T=[[-rate]])


def erlang(k: int, rate: float) -> MarkovianPH:
    T = -rate * np.eye(k) + rate * np.eye(k, k=1)
    alpha = np.zeros(k)
    alpha[0] = 1.0
    return MarkovianPH(alpha=alpha, T=T)


def validate(ph: MarkovianPH, tolerance: float = VALIDATION_TOLERANCE) -> list[Violation]:
    """Return every violated Markovian constraint; an empty list means valid."""
    violations = []
    alpha, T = ph.alpha, ph.T

    for i in np.flatnonzero(alpha < -tolerance):
        violations.append(
            Violation(kind="alpha-negative", index=(int(i),), magnitude=float(-alpha[i]))
        )

    excess = float(abs(alpha.sum() - 1.0))
    if excess > tolerance:
        violations.append(Violation(kind="alpha-sum", magnitude=excess))

    off_diagonal = ~np.eye(ph.n, dtype=bool)
    for i, j in zip(*np.nonzero(off_diagonal & (T < -tolerance))):
        violations.append(
            Violation(
                kind="off-diagonal-negative", index=(int(i), int(j)), magnitude=float(-T[i, j])
            )
        )

    for i in np.flatnonzero(np.diag(T) >= 0):
        violations.append(
            Violation(kind="diagonal-nonnegative", index=(int(i),), magnitude=float(T[i, i]))
        )

    row_sums = T.sum(axis=1)
    for i in np.flatnonzero(row_sums > tolerance):
        violations.append(
            Violation(kind="row-sum-positive", index=(int(i),), magnitude=float(row_sums[i]))
        )

    return violations


def is_valid(ph: MarkovianPH) -> bool:
    return not validate(ph)


def factorize(T: np.ndarray):
    """LU-factorize T, raising SingularMatrixError on a vanishing pivot."""
    lu, piv = linalg.lu_factor(T, check_finite=True)
    pivot = float(np.min(np.abs(np.diag(lu))))
    if pivot < PIVOT_THRESHOLD:
        raise SingularMatrixError(
            f"Subgenerator is singular (smallest pivot {pivot:.3e})", pivot=pivot
        )
    return lu, piv


def moments(ph: MarkovianPH, count: int) -> np.ndarray:
    """
    Raw moments m_1..m_count, m_k = k! (-1)^k alpha T^{-k} 1.

    Uses one LU factorization and `count` sequential solves T u_k = u_{k-1}.
    """
    if count < 1:
        raise ValueError("moment count must be at least 1")

    factors = factorize(ph.T)
    u = np.ones(ph.n)
    coefficient = 1.0
    values = np.empty(count)
    for k in range(1, count + 1):
        u = linalg.lu_solve(factors, u)
        coefficient *= -k
        values[k - 1] = coefficient * float(ph.alpha @ u)
    return values


def cdf(ph: MarkovianPH, x: float) -> float:
    """P(X <= x) = 1 - alpha exp(T x) 1."""
    if x < 0:
        raise ValueError("cdf is defined for x >= 0")
    survival = float(ph.alpha @ expm_action(ph.T, x, np.ones(ph.n)))
    return float(np.clip(1.0 - survival, 0.0, 1.0))


def pdf(ph: MarkovianPH, x: float) -> float:
    """f(x) = alpha exp(T x) t with t = -T 1."""
    if x < 0:
        raise ValueError("pdf is defined for x >= 0")
    density = float(ph.alpha @ expm_action(ph.T, x, ph.exit_vector))
    return max(density, 0.0)


def density_on_grid(ph: MarkovianPH, x_max: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Densities on the uniform grid 0, h, ..., x_max (panels + 1 points).

    Steps the row vector alpha exp(T x) forward with a single exp(T h).
    """
    xs = np.linspace(0.0, x_max, panels + 1)
    step = linalg.expm(ph.T * (x_max / panels))
    exit_vector = ph.exit_vector

    densities = np.empty(panels + 1)
    row = ph.alpha.copy()
    for k in range(panels + 1):
        densities[k] = row @ exit_vector
        row = row @ step
    return xs, np.maximum(densities, 0.0)


def quantile(ph: MarkovianPH, p: float) -> float:
    """Smallest x with cdf(x) = p, for p in (0, 1)."""
    if not 0 < p < 1:
        raise ValueError("quantile level must lie strictly between 0 and 1")

    upper = float(moments(ph, 1)[0])
    while cdf(ph, upper) < p:
        upper *= 2.0
    return float(optimize.brentq(lambda x: cdf(ph, x) - p, 0.0, upper, xtol=1e-14 * upper))


def normalize_mean(ph: MarkovianPH, target_mean: float = 1.0) -> MarkovianPH:
    """Rescale time so that the first moment equals target_mean."""
    if target_mean <= 0:
        raise ValueError("target mean must be positive")
    mean = float(moments(ph, 1)[0])
    return MarkovianPH(alpha=ph.alpha, T=ph.T * (mean / target_mean))


def moment_statistics(values: np.ndarray) -> MomentStatistics:
    """SCV, skewness and (non-excess) kurtosis from raw moments m_1..m_4."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 4:
        raise InvalidTargetError("moment statistics need the first four raw moments")
    m1, m2, m3, m4 = values[:4]
    variance = m2 - m1**2
    skewness = (m3 - 3 * m1 * m2 + 2 * m1**3) / variance**1.5
    kurtosis = (m4 - 4 * m1 * m3 + 6 * m1**2 * m2 - 3 * m1**4) / variance**2
    return MomentStatistics(scv=variance / m1**2, skewness=skewness, kurtosis=kurtosis)
