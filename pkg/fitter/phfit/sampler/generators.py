"""
Random PH generators for building test sets.

Rates and probabilities are drawn uniformly in the ranges below. Every generator
returns a valid Markovian PH; callers normalize the mean.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from phfit.core.distribution import moments, normalize_mean
from phfit.core.models import MarkovianPH
from phfit.reparam.maps import coxian_ph, hypererlang_ph, to_markovian_general
from phfit.reparam.models import GeneralParams, StructureChoices

from .models import SampledInstance, SampleSpec

logger = logging.getLogger(__name__)

RATE_RANGE = (0.1, 10.0)


def sample_general(n: int, rng: np.random.Generator) -> MarkovianPH:
    """
    Interior general PH through the general map, then a uniformly drawn number of
    uniformly placed off-diagonal entries set to zero.
    """
    draws = rng.exponential(size=n)
    alpha = draws / draws.sum()
    gamma = rng.uniform(*RATE_RANGE, size=n)
    Z = rng.uniform(0.0, 1.0, size=(n, n))
    ph = to_markovian_general(GeneralParams(a=np.log(alpha), gamma=gamma, Z=Z))

    off_diagonal = np.flatnonzero(~np.eye(n, dtype=bool).ravel())
    zeros = int(rng.integers(0, off_diagonal.size + 1))
    T = ph.T.copy()
    # removing jump rates only moves mass into the exit rate; row sums stay <= 0
    T.ravel()[rng.choice(off_diagonal, size=zeros, replace=False)] = 0.0
    return MarkovianPH(alpha=alpha, T=T)


def sample_coxian(n: int, rng: np.random.Generator) -> MarkovianPH:
    probabilities = rng.uniform(0.0, 1.0, size=n - 1)
    rates = rng.uniform(*RATE_RANGE, size=n)
    return coxian_ph(rates, probabilities)


def sample_composition(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform composition of n into k positive parts, via k - 1 of the n - 1 gaps."""
    if k == 1:
        return np.array([n])
    cuts = np.sort(rng.choice(n - 1, size=k - 1, replace=False)) + 1
    return np.diff(np.concatenate([[0], cuts, [n]]))


def sample_hypererlang(n: int, rng: np.random.Generator) -> MarkovianPH:
    k = int(rng.integers(1, max(1, n // 2) + 1))
    blocks = sample_composition(n, k, rng)
    weights = rng.uniform(0.0, 1.0, size=k)
    weights = weights / weights.sum()
    rates = rng.uniform(*RATE_RANGE, size=k)
    return hypererlang_ph(weights, rates, blocks)


SAMPLERS = {
    StructureChoices.GENERAL: sample_general,
    StructureChoices.COXIAN: sample_coxian,
    StructureChoices.HYPER_ERLANG: sample_hypererlang,
}


def instance_id(family: str, index: int) -> str:
    return f"{family}-{index:04d}"


def sample_instance(spec: SampleSpec, index: int) -> SampledInstance:
    rng = np.random.default_rng([spec.seed, index])
    low, high = spec.size_range
    n = int(rng.integers(low, high + 1))
    ph = normalize_mean(SAMPLERS[spec.family](n, rng), 1.0)
    return SampledInstance(
        id=instance_id(spec.family, index),
        family=spec.family,
        n=n,
        ph=ph,
        moments=moments(ph, spec.moment_count),
    )


def generate_testset(spec: SampleSpec, workers: int = 1) -> list[SampledInstance]:
    """Mean-1 instances with their moment signatures, identical for every worker count."""
    logger.info(
        f"Sampling {spec.count} {spec.family} instances with orders in "
        f"{list(spec.size_range)} (seed {spec.seed})"
    )
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="phfit-sample") as pool:
        return list(pool.map(lambda index: sample_instance(spec, index), range(spec.count)))
