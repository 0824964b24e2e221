import logging

import numpy as np

from phfit.reparam.structures import Structure, structure_for

from ..models import FitConfig

logger = logging.getLogger(__name__)


def structure_from_config(config: FitConfig) -> Structure:
    return structure_for(config.structure, n=config.n, blocks=config.blocks)


def init_population(config: FitConfig, structure: Structure | None = None) -> np.ndarray:
    """
    Starting points for every candidate, shape (population, structure.size).

    Candidate i draws from its own stream seeded with (seed, i), so the population
    does not depend on how it is later split across workers.
    """
    structure = structure or structure_from_config(config)
    population = np.empty((config.population, structure.size))
    for index in range(config.population):
        population[index] = structure.initial(np.random.default_rng([config.seed, index]))
    logger.debug(
        f"Initialized {config.population} candidates for {structure.describe()} "
        f"with seed {config.seed}"
    )
    return population
