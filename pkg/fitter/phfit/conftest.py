import logging

import numpy as np
import pytest
from pytest_factoryboy import register

from phfit.core.factories import DensePHFactory, ErlangFactory, ExponentialFactory

register(ExponentialFactory, "exponential_ph")
register(ErlangFactory, "erlang_ph")
register(DensePHFactory, "dense_ph")


@pytest.fixture(autouse=True)
def propagate_logs():
    """
    The package logger does not propagate outside of tests so log lines are not
    duplicated. Enabling it here so the caplog fixture can inspect them.
    """
    loggers = [logging.getLogger("phfit"), logging.getLogger("phfit.progress")]
    previous = [logger.propagate for logger in loggers]
    for logger in loggers:
        logger.propagate = True
    yield
    for logger, value in zip(loggers, previous):
        logger.propagate = value


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def sample_dense_phs(dense_ph_factory):
    return [dense_ph_factory(size=size, seed=seed) for seed, size in enumerate([1, 2, 3, 5, 8])]
