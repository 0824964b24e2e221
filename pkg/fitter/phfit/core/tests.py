import math

import numpy as np
import pytest
from scipy import integrate

from phfit.common.exceptions import SingularMatrixError

from .distribution import (
    cdf,
    density_on_grid,
    erlang,
    exponential,
    moment_statistics,
    moments,
    normalize_mean,
    pdf,
    quantile,
    validate,
)
from .models import MarkovianPH
from .sampling import sample_absorption


def test_validate_exponential_is_valid(exponential_ph):
    assert validate(exponential_ph) == []


def test_validate_alpha_sum_violation():
    ph = MarkovianPH(alpha=[0.5, 0.6], T=[[-1, 0], [0, -1]])
    violations = validate(ph)
    assert len(violations) == 1
    assert violations[0].kind == "alpha-sum"
    assert violations[0].magnitude == pytest.approx(0.1)


def test_validate_row_sum_violation():
    ph = MarkovianPH(alpha=[1, 0], T=[[-1, 2], [0, -1]])
    violations = validate(ph)
    assert [(v.kind, v.index) for v in violations] == [("row-sum-positive", (0,))]
    assert violations[0].magnitude == pytest.approx(1.0)


def test_validate_reports_every_violation():
    ph = MarkovianPH(alpha=[-0.2, 1.2], T=[[0.5, -1.0], [0.0, -1.0]])
    kinds = {v.kind for v in validate(ph)}
    assert kinds == {
        "alpha-negative",
        "off-diagonal-negative",
        "diagonal-nonnegative",
    }


def test_document_fills_order_and_checks_shapes():
    ph = MarkovianPH.model_validate({"alpha": [0.3, 0.7], "T": [[-1, 0.5], [0, -2]]})
    assert ph.n == 2
    with pytest.raises(ValueError):
        MarkovianPH(n=3, alpha=[1.0, 0.0], T=[[-1, 0], [0, -1]])


def test_document_round_trip_is_exact(dense_ph):
    restored = MarkovianPH.model_validate_json(dense_ph.model_dump_json())
    np.testing.assert_array_equal(restored.alpha, dense_ph.alpha)
    np.testing.assert_array_equal(restored.T, dense_ph.T)


def test_arrays_are_read_only(dense_ph):
    with pytest.raises(ValueError):
        dense_ph.T[0, 0] = 1.0


def test_moments_exponential(exponential_ph):
    np.testing.assert_allclose(moments(exponential_ph, 5), [1, 2, 6, 24, 120], rtol=1e-12)


def test_moments_erlang_two():
    np.testing.assert_allclose(moments(erlang(2, 2.0), 2), [1.0, 1.5], rtol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("rate", [0.5, 1.0, 3.0])
def test_moments_erlang_closed_form(k, rate):
    expected = [math.prod(range(k, k + i)) / rate**i for i in range(1, 11)]
    np.testing.assert_allclose(moments(erlang(k, rate), 10), expected, rtol=1e-10)


def test_moments_match_explicit_inverse(sample_dense_phs):
    for ph in sample_dense_phs:
        inverse = np.linalg.inv(ph.T)
        explicit = [
            math.factorial(i)
            * (-1) ** i
            * ph.alpha
            @ np.linalg.matrix_power(inverse, i)
            @ np.ones(ph.n)
            for i in range(1, 6)
        ]
        np.testing.assert_allclose(moments(ph, 5), explicit, rtol=1e-10)


def test_moments_singular_raises():
    ph = MarkovianPH(alpha=[1.0, 0.0], T=[[-1.0, 1.0], [1.0, -1.0]])
    with pytest.raises(SingularMatrixError):
        moments(ph, 2)


def test_cdf_exponential(exponential_ph):
    assert cdf(exponential_ph, 0.0) == 0.0
    assert cdf(exponential_ph, math.log(2)) == pytest.approx(0.5, abs=1e-12)


def test_cdf_erlang_two():
    assert cdf(erlang(2, 1.0), 2.0) == pytest.approx(1 - 3 * math.exp(-2), abs=1e-12)


def test_cdf_large_rate_product():
    ph = exponential(250.0)
    assert cdf(ph, 0.01) == pytest.approx(1 - math.exp(-2.5), abs=1e-12)


def test_pdf_exponential():
    assert pdf(exponential(1.0), 0.0) == pytest.approx(1.0)
    assert pdf(exponential(3.0), 1.0) == pytest.approx(3 * math.exp(-3), abs=1e-12)


def test_pdf_integrates_to_cdf(dense_ph_factory):
    for seed in range(10):
        ph = dense_ph_factory(size=4, seed=100 + seed)
        x = 1.5
        integral, _ = integrate.quad(lambda s: pdf(ph, s), 0.0, x, epsabs=1e-10)
        assert integral == pytest.approx(cdf(ph, x), abs=1e-6)


def test_cdf_nondecreasing_and_pdf_nonnegative(dense_ph_factory):
    for seed in range(50):
        ph = dense_ph_factory(size=3, seed=200 + seed)
        mean = moments(ph, 1)[0]
        xs = np.linspace(0.0, 10 * mean, 100)
        values = [cdf(ph, x) for x in xs]
        assert np.all(np.diff(values) >= -1e-12)
        _, densities = density_on_grid(ph, 10 * mean, 99)
        assert np.all(densities >= 0)


def test_density_grid_matches_pointwise(dense_ph):
    xs, densities = density_on_grid(dense_ph, 3.0, 30)
    expected = [pdf(dense_ph, x) for x in xs]
    np.testing.assert_allclose(densities, expected, atol=1e-10)


def test_quantile_inverts_cdf(erlang_ph):
    x = quantile(erlang_ph, 0.3)
    assert cdf(erlang_ph, x) == pytest.approx(0.3, abs=1e-10)
    assert quantile(exponential(1.0), 0.5) == pytest.approx(math.log(2), rel=1e-10)


def test_normalize_mean():
    scaled = normalize_mean(exponential(2.0), 1.0)
    np.testing.assert_allclose(scaled.T, [[-1.0]])

    erlang3 = normalize_mean(erlang(3, 1.0), 1.0)
    np.testing.assert_allclose(erlang3.T, erlang(3, 3.0).T, rtol=1e-12)
    np.testing.assert_allclose(moments(erlang3, 2), [1.0, 4.0 / 3.0], rtol=1e-12)


def test_normalize_mean_identity_and_scaling(sample_dense_phs):
    for ph in sample_dense_phs:
        unit = normalize_mean(ph, 1.0)
        assert moments(unit, 1)[0] == pytest.approx(1.0, abs=1e-10)
        again = normalize_mean(unit, 1.0)
        np.testing.assert_allclose(again.T, unit.T, rtol=1e-12)

        original = moments(ph, 3)
        scaled = moments(normalize_mean(ph, 2.5), 3)
        ratio = 2.5 / original[0]
        np.testing.assert_allclose(scaled, original * ratio ** np.arange(1, 4), rtol=1e-10)


def test_moment_statistics_exponential():
    stats = moment_statistics(moments(exponential(1.0), 4))
    assert stats.scv == pytest.approx(1.0)
    assert stats.skewness == pytest.approx(2.0)
    assert stats.kurtosis == pytest.approx(9.0)


def test_sampling_is_deterministic(dense_ph):
    first = sample_absorption(dense_ph, np.random.default_rng(7), 1000)
    second = sample_absorption(dense_ph, np.random.default_rng(7), 1000)
    np.testing.assert_array_equal(first, second)
    assert np.all(first >= 0)


@pytest.mark.statistical
def test_sampling_exponential_mean(exponential_ph, rng):
    times = sample_absorption(exponential_ph, rng, 10**6)
    assert 0.996 <= times.mean() <= 1.004


@pytest.mark.statistical
def test_sampling_erlang_mean(rng):
    times = sample_absorption(erlang(2, 2.0), rng, 10**6)
    standard_error = math.sqrt(0.5) / math.sqrt(times.size)
    assert abs(times.mean() - 1.0) <= 4 * standard_error


@pytest.mark.statistical
def test_sampling_matches_moments(dense_ph_factory, rng):
    ph = dense_ph_factory(size=5, seed=3)
    times = sample_absorption(ph, rng, 10**6)
    exact = moments(ph, 6)
    for k in range(1, 4):
        standard_error = math.sqrt((exact[2 * k - 1] - exact[k - 1] ** 2) / times.size)
        assert abs(np.mean(times**k) - exact[k - 1]) <= 4 * standard_error
