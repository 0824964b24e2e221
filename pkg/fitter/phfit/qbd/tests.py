import json
from importlib import resources

import numpy as np
import pytest

from phfit.common.exceptions import PhFitError, UnstableQueueError
from phfit.core.distribution import erlang, exponential, normalize_mean
from phfit.core.models import MarkovianPH
from phfit.optimizer.models import FitConfig

from .models import QbdModel
from .simulation import simulate_queue_pmf, waiting_times
from .solver import build_blocks, solve_boundary, solve_R, stationary_pmf, utilization
from .study import queue_study


def _mm1(rho: float) -> QbdModel:
    return QbdModel(arrival=exponential(rho), service=exponential(1.0))


def _stable_pairs(dense_ph_factory, count=10):
    pairs = []
    for seed in range(count):
        arrival = dense_ph_factory(size=1 + seed % 3, seed=seed)
        service = dense_ph_factory(size=1 + (seed + 1) % 4, seed=100 + seed)
        pairs.append((normalize_mean(arrival, 1.0), normalize_mean(service, 0.3 + 0.06 * seed)))
    return pairs


def _case_study_ph(name: str) -> MarkovianPH:
    text = resources.files("phfit.data.case_study").joinpath(f"{name}.json").read_text()
    return MarkovianPH.model_validate(json.loads(text))


def test_mm1_blocks_are_scalar():
    blocks = build_blocks(exponential(0.7), exponential(1.0))
    expected = {"A0": 0.7, "A1": -1.7, "A2": 1.0, "B00": -0.7, "B01": 0.7, "B10": 1.0}
    for name, value in expected.items():
        np.testing.assert_allclose(getattr(blocks, name), [[value]], rtol=1e-15)


def test_block_dimensions_and_row_sums(dense_ph_factory):
    for arrival, service in _stable_pairs(dense_ph_factory):
        blocks = build_blocks(arrival, service)
        size = arrival.n * service.n
        for block in [blocks.A0, blocks.A1, blocks.A2]:
            assert block.shape == (size, size)
        assert blocks.B01.shape == (arrival.n, size)
        assert blocks.B10.shape == (size, arrival.n)

        repeating = (blocks.A0 + blocks.A1 + blocks.A2).sum(axis=1)
        np.testing.assert_allclose(repeating, 0.0, atol=1e-12)
        level_zero = blocks.B00.sum(axis=1) + blocks.B01.sum(axis=1)
        np.testing.assert_allclose(level_zero, 0.0, atol=1e-12)
        level_one = blocks.B10.sum(axis=1) + (blocks.A0 + blocks.A1).sum(axis=1)
        np.testing.assert_allclose(level_one, 0.0, atol=1e-12)


def test_mm1_rate_matrix():
    R = solve_R(build_blocks(exponential(0.7), exponential(1.0)))
    assert R.shape == (1, 1)
    assert R[0, 0] == pytest.approx(0.7, abs=1e-10)


def test_rate_matrix_solves_defining_equation(dense_ph_factory):
    for arrival, service in _stable_pairs(dense_ph_factory):
        assert utilization(arrival, service) < 1
        blocks = build_blocks(arrival, service)
        R = solve_R(blocks)
        assert blocks.residual(R) <= 1e-10
        assert np.all(R >= -1e-14)
        assert np.max(np.abs(np.linalg.eigvals(R))) < 1


@pytest.mark.parametrize("rho", [0.3, 0.5, 0.7, 0.9])
def test_mm1_geometric_law(rho):
    pmf = stationary_pmf(_mm1(rho), 20)
    k = np.arange(21)
    np.testing.assert_allclose(pmf, (1 - rho) * rho**k, rtol=0, atol=1e-8)
    assert 1 - pmf[0] == pytest.approx(rho, abs=1e-10)


def test_mm1_half_load_empty_probability():
    assert stationary_pmf(_mm1(0.5), 0)[0] == pytest.approx(0.5, abs=1e-10)


def test_normalization_includes_tail(dense_ph_factory):
    for arrival, service in _stable_pairs(dense_ph_factory, count=5):
        blocks = build_blocks(arrival, service)
        R = solve_R(blocks)
        pi_0, pi_1 = solve_boundary(blocks, R)
        size = blocks.level_size
        tail = pi_1 @ np.linalg.solve(np.eye(size) - R, np.ones(size))
        assert pi_0.sum() + tail == pytest.approx(1.0, abs=1e-10)

        pmf = stationary_pmf(QbdModel(arrival=arrival, service=service), 50)
        assert np.all(pmf >= 0)
        assert pmf.sum() <= 1 + 1e-12


def test_level_probabilities_are_geometric():
    model = QbdModel(arrival=erlang(2, 2.0), service=erlang(3, 3.0 / 0.6))
    blocks = build_blocks(model.arrival, model.service)
    R = solve_R(blocks)
    _, pi_1 = solve_boundary(blocks, R)
    pmf = stationary_pmf(model, 4)
    expected = [(pi_1 @ np.linalg.matrix_power(R, k - 1)).sum() for k in range(1, 5)]
    np.testing.assert_allclose(pmf[1:], expected, rtol=1e-12)


def test_unstable_queue_is_rejected():
    with pytest.raises(UnstableQueueError) as error:
        stationary_pmf(QbdModel(arrival=exponential(1.0), service=exponential(1 / 1.05)), 10)
    assert error.value.rho == pytest.approx(1.05)


def test_waiting_times_follow_lindley():
    waits = waiting_times(np.array([1.0, 1.0, 1.0, 5.0]), np.array([2.0, 0.5, 1.0, 1.0]))
    np.testing.assert_allclose(waits, [0.0, 1.0, 0.5, 0.0])


@pytest.mark.statistical
def test_simulated_mm1_matches_geometric_law(rng):
    pmf = simulate_queue_pmf(exponential(0.5), exponential(1.0), 2 * 10**5, rng, 30)
    exact = 0.5 * 0.5 ** np.arange(31)
    assert 0.5 * np.abs(pmf - exact).sum() < 0.02


@pytest.mark.statistical
def test_erlang_queue_against_simulation(rng):
    arrival, service = erlang(2, 2.0), erlang(2, 2.0 / 0.7)
    exact = stationary_pmf(QbdModel(arrival=arrival, service=service), 60)
    simulated = simulate_queue_pmf(arrival, service, 10**6, rng, 60)
    assert 0.5 * np.abs(exact - simulated).sum() < 0.01


@pytest.mark.slow
def test_erlang_queue_against_long_simulation(rng):
    arrival, service = erlang(2, 2.0), erlang(2, 2.0 / 0.7)
    exact = stationary_pmf(QbdModel(arrival=arrival, service=service), 60)
    simulated = simulate_queue_pmf(arrival, service, 10**7, rng, 60)
    assert 0.5 * np.abs(exact - simulated).sum() < 0.005


def _exact_fitter(arrival, service):
    def fitter(target, config):
        return arrival if target.moments[0] == pytest.approx(1.0) else service

    return fitter


def test_study_with_exact_fits_has_no_error():
    arrival, service = _case_study_ph("arrival"), _case_study_ph("service")
    study = queue_study(
        arrival,
        service,
        [2, 3],
        FitConfig(structure="coxian", n=2),
        k_max=40,
        fitter=_exact_fitter(arrival, service),
    )
    assert study.rho == pytest.approx(0.7, abs=1e-12)
    assert list(study.pmf.columns) == ["k", "p_true", "p_hat_l2", "p_hat_l3"]
    assert list(study.errors.columns) == ["j", "accerr_l2", "accerr_l3"]
    assert len(study.pmf) == 41
    np.testing.assert_allclose(study.errors["accerr_l2"], 0.0, atol=1e-12)
    assert not study.failures


def test_study_records_failed_cells():
    arrival, service = exponential(1.0), exponential(1 / 0.6)

    def fitter(target, config):
        if target.count == 3:
            raise PhFitError("no candidate survived")
        return arrival if target.moments[0] == pytest.approx(1.0) else service

    study = queue_study(
        arrival, service, [2, 3, 4], FitConfig(structure="coxian", n=1), k_max=10, fitter=fitter
    )
    assert set(study.failures) == {3}
    assert study.pmf["p_hat_l3"].isna().all()
    np.testing.assert_allclose(study.pmf["p_hat_l2"], 0.4 * 0.6 ** np.arange(11), atol=1e-10)


def test_total_accumulated_error_is_absolute_sum():
    arrival, service = exponential(1.0), exponential(1 / 0.5)
    wrong = exponential(1 / 0.6)

    def fitter(target, config):
        return arrival if target.moments[0] == pytest.approx(1.0) else wrong

    study = queue_study(
        arrival, service, [2], FitConfig(structure="coxian", n=1), k_max=30, fitter=fitter
    )
    difference = np.abs(study.pmf["p_true"] - study.pmf["p_hat_l2"]).sum()
    assert study.errors["accerr_l2"].iloc[-1] == pytest.approx(difference, rel=1e-12)


@pytest.mark.slow
def test_case_study_more_moments_help():
    config = FitConfig.model_validate_json(
        resources.files("phfit.data.case_study").joinpath("config.json").read_text()
    )
    study = queue_study(_case_study_ph("arrival"), _case_study_ph("service"), [2, 5], config)
    assert not study.failures
    tail = study.errors[study.errors["j"] >= 10]
    assert np.all(tail["accerr_l5"] <= tail["accerr_l2"])
