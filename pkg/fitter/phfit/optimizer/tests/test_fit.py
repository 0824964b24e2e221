import logging

import numpy as np
import pytest

from phfit.common.exceptions import InvalidConfigError
from phfit.core.distribution import erlang, is_valid, moments, normalize_mean
from phfit.metrics.models import EvalRecord
from phfit.metrics.scores import success_rate
from phfit.objective.models import FitTarget
from phfit.reparam.maps import to_markovian

from ..models import FitConfig, scaled_schedule
from ..services.adam import Adam, PlateauDecay
from ..services.fit_manager import FitManager, fit, format_loss
from ..services.population import init_population, structure_from_config

EXPONENTIAL_MOMENTS = [1.0, 2.0, 6.0, 24.0, 120.0]


def _config(**overrides):
    defaults = {"structure": "coxian", "n": 1, "population": 100, "max_epochs": 3000, "seed": 7}
    return FitConfig(**{**defaults, **overrides})


def test_config_rejects_invalid_schedules():
    with pytest.raises(ValueError):
        _config(schedule=[(1, 4), (2, 4)], population=4)
    with pytest.raises(ValueError):
        _config(schedule=[(1, 5)], population=4)
    with pytest.raises(ValueError):
        _config(schedule=[(1, 4), (10, 2)], population=4, max_epochs=5)
    with pytest.raises(ValueError):
        FitConfig(structure="general")
    with pytest.raises(ValueError):
        FitConfig(structure="hyper-erlang", n=10, blocks=(3, 4))


def test_scaled_schedule():
    assert scaled_schedule(10000, 125000) == [(1, 10000), (500, 2000), (5000, 200), (15000, 20)]
    assert scaled_schedule(1000, 30000) == [(1, 1000), (500, 200), (5000, 20), (15000, 2)]
    assert scaled_schedule(100, 1000) == [(1, 100), (500, 20)]
    assert scaled_schedule(3, 125000) == [(1, 3), (500, 1)]


def test_population_is_deterministic():
    config = _config(structure="general", n=3, population=3)
    first = init_population(config)
    second = init_population(config)
    np.testing.assert_array_equal(first, second)
    assert first.shape == (3, 15)


def test_population_rows_do_not_depend_on_size():
    small = init_population(_config(population=3))
    large = init_population(_config(population=10))
    np.testing.assert_array_equal(small, large[:3])


def test_population_maps_to_valid_phs():
    cases = [
        ("general", {"n": 4}),
        ("coxian", {"n": 4}),
        ("hyper-erlang", {"n": None, "blocks": (1, 2)}),
    ]
    for structure, extra in cases:
        config = _config(structure=structure, population=20, **extra)
        model = structure_from_config(config)
        for theta in init_population(config, model):
            assert is_valid(to_markovian(model.unpack(theta)))


def test_adam_moves_against_gradient():
    adam = Adam((1, 2), step_size=0.1)
    theta = adam.step(np.zeros((1, 2)), np.array([[1.0, -2.0]]))
    np.testing.assert_allclose(theta, [[-0.1, 0.1]], rtol=1e-6)
    adam.select(np.array([0]))
    assert adam.first.shape == (1, 2)


def test_plateau_decay_waits_for_patience():
    plateau = PlateauDecay(patience=3)
    assert not plateau.update(1, 1.0)
    assert not plateau.update(2, 0.999)
    assert not plateau.update(3, 0.999)
    assert plateau.update(4, 0.999)
    assert not plateau.update(5, 0.5)
    assert not plateau.update(7, 0.5)
    assert plateau.update(8, 0.5)


def test_adam_decay_respects_floor():
    adam = Adam((1, 1), step_size=0.01)
    adam.decay(0.5, 1e-3)
    assert adam.step_size == pytest.approx(0.005)
    for _ in range(10):
        adam.decay(0.5, 1e-3)
    assert adam.step_size == 1e-3


def test_step_size_shrinks_on_a_plateau():
    # no single exponential has m2 = m1^2, so the loss stalls
    target = FitTarget(moments=[1.0, 1.0])
    config = _config(population=5, max_epochs=400, plateau_patience=50, epsilon=1e-30)
    steps = [record.step_size for record in fit(target, config).history]
    assert steps[0] == 0.01
    assert steps[-1] < steps[0]
    assert all(later <= earlier for earlier, later in zip(steps, steps[1:]))

    fixed = fit(target, config.model_copy(update={"step_decay": 1.0}))
    assert {record.step_size for record in fixed.history} == {0.01}


def test_small_batches_match_one_call():
    config = _config(structure="general", n=3, population=20, batch_size=7, workers=1)
    manager = FitManager(FitTarget(moments=[1.0, 2.5, 9.0]), config)
    theta = init_population(config, manager.structure)
    losses, grads = manager._evaluate(None, theta, with_gradient=True)
    expected_losses, expected_grads = manager.objective(theta)
    np.testing.assert_allclose(losses, expected_losses, rtol=1e-10)
    np.testing.assert_allclose(grads, expected_grads, rtol=1e-10, atol=1e-14)


def test_format_loss():
    assert format_loss(1.5) == "1.500000e+00"
    assert format_loss(float("inf")) == "Infinity"
    assert format_loss(float("nan")) == "NaN"


def test_schedule_accounting():
    result = fit(
        FitTarget(moments=[1.0, 3.0, 12.0]),
        _config(population=4, max_epochs=3, schedule=[(1, 4), (2, 2), (3, 1)], epsilon=1e-30),
    )
    assert result.evaluated_per_epoch == [4, 2, 1]
    assert result.candidates_evaluated == 7
    assert result.epochs_run == 3
    assert result.stop_reason == "max_epochs"


def test_fit_exponential_recovery():
    result = fit(FitTarget(moments=EXPONENTIAL_MOMENTS), _config(max_epochs=20000))
    assert result.stop_reason == "epsilon"
    assert result.final_loss < 1e-9
    assert -result.ph.T[0, 0] == pytest.approx(1.0, abs=1e-4)
    fitted = moments(result.ph, 5)
    expected = np.abs(fitted - EXPONENTIAL_MOMENTS) / EXPONENTIAL_MOMENTS * 100
    np.testing.assert_allclose(result.per_moment_mape, expected)


def test_fit_is_deterministic():
    target = FitTarget(moments=[1.0, 2.5, 9.0])
    config = _config(structure="coxian", n=3, population=20, max_epochs=200)
    first, second = fit(target, config), fit(target, config)
    assert first.selected_index == second.selected_index
    assert first.final_loss == second.final_loss
    np.testing.assert_array_equal(first.ph.T, second.ph.T)


def test_workers_do_not_change_the_result():
    target = FitTarget(moments=[1.0, 2.5, 9.0])
    config = _config(structure="coxian", n=3, population=20, max_epochs=200)
    serial = fit(target, config)
    parallel = fit(target, config.model_copy(update={"workers": 3}))
    assert parallel.selected_index == serial.selected_index
    assert parallel.final_loss == pytest.approx(serial.final_loss, abs=1e-12)


def test_rescaling_is_exact():
    target = FitTarget(moments=[1.0, 2.5, 9.0])
    c = 4.0
    scaled = FitTarget(moments=target.moments * c ** np.arange(1, 4))
    config = _config(structure="coxian", n=3, population=20, max_epochs=200)
    base, stretched = fit(target, config), fit(scaled, config)
    assert stretched.selected_index == base.selected_index
    np.testing.assert_allclose(
        moments(stretched.ph, 3), moments(base.ph, 3) * c ** np.arange(1, 4), rtol=1e-9
    )


def test_best_loss_never_increases():
    for seed in range(5):
        result = fit(
            FitTarget(moments=[1.0, 3.0, 15.0]),
            _config(structure="hyper-erlang", n=None, blocks=(1, 2), population=30,
                    max_epochs=60, schedule=[(1, 30), (20, 10), (40, 3)], seed=seed),
        )
        best = [record.best_loss for record in result.history]
        assert all(later <= earlier for earlier, later in zip(best, best[1:]))
        assert [record.live for record in result.history][-1] <= 3


def test_progress_lines(caplog):
    with caplog.at_level(logging.INFO, logger="phfit.progress"):
        fit(FitTarget(moments=[1.0, 3.0]), _config(max_epochs=10, log_every=5, epsilon=1e-30))
    lines = [r.getMessage() for r in caplog.records if r.name == "phfit.progress"]
    assert [line.split(",")[0] for line in lines] == ["5", "10"]
    assert all(len(line.split(",")) == 3 for line in lines)


def test_missing_default_blocks():
    with pytest.raises(InvalidConfigError):
        FitManager(FitTarget(moments=[1.0]), FitConfig(structure="hyper-erlang", n=7))


@pytest.mark.slow
def test_erlang_four_recovery():
    target = FitTarget(moments=moments(normalize_mean(erlang(4, 1.0)), 5))
    config = FitConfig(
        structure="hyper-erlang", blocks=(3, 4, 6, 7), population=1000, max_epochs=30000, seed=1
    )
    result = fit(target, config)
    assert result.final_loss < 1e-9
    assert result.max_mape <= 0.01


@pytest.mark.slow
def test_desk_scale_success_rate():
    from phfit.sampler.generators import sample_coxian

    records = []
    for index in range(30):
        rng = np.random.default_rng([2024, index])
        reference = normalize_mean(sample_coxian(int(rng.integers(1, 11)), rng))
        target = FitTarget(moments=moments(reference, 5))
        result = fit(
            target,
            FitConfig(
                structure="hyper-erlang", n=20, population=1000, max_epochs=30000, seed=index
            ),
        )
        records.append(
            EvalRecord(instance_id=str(index), target=target.moments, max_mape=result.max_mape)
        )
    assert success_rate(records, 1.0) >= 80.0
