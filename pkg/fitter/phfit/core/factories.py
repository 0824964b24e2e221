import factory
import numpy as np

from .models import MarkovianPH


class ExponentialFactory(factory.Factory):
    class Meta:
        model = MarkovianPH

    class Params:
        rate = 1.0

    alpha = factory.LazyFunction(lambda: [1.0])
    T = factory.LazyAttribute(lambda o: [[-o.rate]])


class ErlangFactory(factory.Factory):
    class Meta:
        model = MarkovianPH

    class Params:
        k = 2
        rate = 1.0

    alpha = factory.LazyAttribute(lambda o: np.eye(o.k)[0])
    T = factory.LazyAttribute(lambda o: -o.rate * np.eye(o.k) + o.rate * np.eye(o.k, k=1))


def _dense_interior(o):
    rng = np.random.default_rng([o.seed, o.size])
    T = rng.uniform(0.1, 2.0, size=(o.size, o.size))
    exits = rng.uniform(0.1, 2.0, size=o.size)
    np.fill_diagonal(T, 0.0)
    np.fill_diagonal(T, -(T.sum(axis=1) + exits))
    alpha = rng.dirichlet(np.ones(o.size))
    return alpha, T


class DensePHFactory(factory.Factory):
    """Random PH with every alpha entry, off-diagonal rate and exit rate positive."""

    class Meta:
        model = MarkovianPH

    class Params:
        size = 5
        seed = factory.Sequence(lambda n: n)
        parts = factory.LazyAttribute(_dense_interior)

    alpha = factory.LazyAttribute(lambda o: o.parts[0])
    T = factory.LazyAttribute(lambda o: o.parts[1])
