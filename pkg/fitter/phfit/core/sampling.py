import logging

import numpy as np

from .models import MarkovianPH

logger = logging.getLogger(__name__)


def jump_table(ph: MarkovianPH) -> np.ndarray:
    """
    Cumulative jump probabilities of the embedded chain, shape (n, n + 1).

    Column j < n is phase j; the last column is absorption.
    """
    rates = -np.diag(ph.T)
    probabilities = np.zeros((ph.n, ph.n + 1))
    probabilities[:, : ph.n] = ph.T / rates[:, None]
    np.fill_diagonal(probabilities[:, : ph.n], 0.0)
    probabilities[:, ph.n] = np.maximum(1.0 - probabilities[:, : ph.n].sum(axis=1), 0.0)
    cumulative = np.cumsum(probabilities, axis=1)
    cumulative[:, -1] = 1.0
    return cumulative


def sample_absorption(ph: MarkovianPH, rng: np.random.Generator, count: int) -> np.ndarray:
    """
    Simulate `count` absorption times of the CTMC behind ph.

    All paths advance together: each round draws one sojourn and one jump for every
    path still in a transient phase. Deterministic for a given generator state.
    """
    if count < 1:
        raise ValueError("count must be at least 1")

    rates = -np.diag(ph.T)
    table = jump_table(ph)
    initial = np.cumsum(ph.alpha)
    initial[-1] = 1.0

    phases = np.searchsorted(initial, rng.random(count), side="right")
    times = np.zeros(count)
    active = np.arange(count)

    while active.size:
        current = phases[active]
        times[active] += rng.exponential(1.0 / rates[current])
        draws = rng.random(active.size)
        phases[active] = (draws[:, None] >= table[current]).sum(axis=1)
        active = active[phases[active] < ph.n]

    return times
