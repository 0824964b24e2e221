import logging

import numpy as np

from phfit.core.models import MarkovianPH
from phfit.core.sampling import sample_absorption

logger = logging.getLogger(__name__)


def waiting_times(interarrivals: np.ndarray, services: np.ndarray) -> np.ndarray:
    """
    FIFO waiting times from the Lindley recursion w_i = max(0, w_{i-1} + s_{i-1} - a_i),
    evaluated as a reflected random walk. The first customer finds the system empty.
    """
    steps = np.concatenate([[0.0], services[:-1] - interarrivals[1:]])
    walk = np.cumsum(steps)
    return walk - np.minimum.accumulate(np.minimum(walk, 0.0))


def simulate_queue_pmf(
    arrival: MarkovianPH,
    service: MarkovianPH,
    arrivals: int,
    rng: np.random.Generator,
    k_max: int,
) -> np.ndarray:
    """
    Time-average distribution of the number in system over one long FIFO run,
    truncated to 0..k_max.
    """
    interarrivals = sample_absorption(arrival, rng, arrivals)
    services = sample_absorption(service, rng, arrivals)

    arrival_times = np.cumsum(interarrivals)
    departures = arrival_times + waiting_times(interarrivals, services) + services

    times = np.concatenate([arrival_times, departures])
    step = np.ones(arrivals, dtype=np.int64)
    changes = np.concatenate([step, -step])
    order = np.argsort(times, kind="stable")
    times, levels = times[order], np.cumsum(changes[order])

    durations = np.diff(np.concatenate([[0.0], times]))
    # the level before each event is the one held during the preceding interval
    held = np.concatenate([[0], levels[:-1]])
    occupancy = np.bincount(held, weights=durations, minlength=k_max + 1)
    pmf = occupancy[: k_max + 1] / times[-1]
    logger.debug(f"Simulated {arrivals} arrivals over horizon {times[-1]:.3e}")
    return pmf
