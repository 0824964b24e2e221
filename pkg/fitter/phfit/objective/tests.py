import math

import numpy as np
import pytest

from phfit.common.exceptions import InvalidTargetError, SingularMatrixError
from phfit.core.distribution import cdf, exponential, moments
from phfit.reparam.maps import to_markovian
from phfit.reparam.models import CoxianParams, GeneralParams, HyperErlangParams
from phfit.reparam.structures import structure_of

from .loss import (
    Objective,
    gradient,
    loss,
    rescale_target,
    restore_scale,
    shape_percentiles,
    target_from_ph,
)
from .models import FitTarget, default_weights

UNIT_EXPONENTIAL = CoxianParams(gamma=[1.0], u=[])


def test_default_weights():
    np.testing.assert_allclose(default_weights([1, 2, 6]), [1, 0.25, 1 / 36])
    np.testing.assert_array_equal(default_weights(np.ones(4)), np.ones(4))
    with pytest.raises(InvalidTargetError):
        default_weights([1, 0])


def test_target_defaults():
    target = FitTarget(moments=[1, 2, 6])
    np.testing.assert_allclose(target.moment_weights, [1, 0.25, 1 / 36])
    assert target.Q == 0.05
    assert target.cdf_points.shape == (0, 2)
    assert target.Q_pdf == 0.0


@pytest.mark.parametrize(
    "document",
    [
        {"moments": []},
        {"moments": [1.0, -2.0]},
        {"moments": [1.0], "weights": [1.0, 1.0]},
        {"moments": [1.0], "weights": [0.0]},
        {"moments": [1.0], "cdf_points": [[0.0, 0.5]]},
        {"moments": [1.0], "cdf_points": [[1.0, 1.0]]},
        {"moments": [1.0], "cdf_points": [1.0, 0.5]},
        {"moments": [1.0], "Q": -1},
        {"moments": [1.0], "extra": 1},
    ],
)
def test_target_rejects_invalid_documents(document):
    with pytest.raises(ValueError):
        FitTarget.model_validate(document)


def test_loss_zero_on_exact_match():
    target = FitTarget(moments=[1, 2, 6, 24, 120])
    assert loss(UNIT_EXPONENTIAL, target) <= 1e-20


def test_loss_hand_computed():
    assert loss(UNIT_EXPONENTIAL, FitTarget(moments=[2.0], weights=[0.25])) == pytest.approx(0.25)


def test_loss_one_percent_relative_error():
    target = FitTarget(moments=np.array([1, 2, 6, 24, 120]) / 1.01)
    assert loss(UNIT_EXPONENTIAL, target) == pytest.approx(5 * 0.01**2, abs=1e-12)


def test_loss_with_cdf_point():
    target = FitTarget(moments=[1, 2, 6, 24, 120], cdf_points=[[math.log(2), 0.4]], Q=0.05)
    assert loss(UNIT_EXPONENTIAL, target) == pytest.approx(5e-4, abs=1e-14)


def test_zero_trade_off_ignores_cdf_points():
    target = FitTarget(moments=[1, 2], cdf_points=[[1.0, 0.1]], Q=0.0)
    assert loss(UNIT_EXPONENTIAL, target) == 0.0


def test_coxian_hand_derivative():
    target = FitTarget(moments=[1.0])
    params = CoxianParams(gamma=[2.0], u=[])
    assert loss(params, target) == pytest.approx(0.5625)
    assert gradient(params, target).gamma[0] == pytest.approx(0.375, rel=1e-12)


def test_gradient_vanishes_at_exact_match():
    target = FitTarget(moments=[1, 2, 6, 24, 120])
    grad = gradient(UNIT_EXPONENTIAL, target)
    assert np.linalg.norm(grad.gamma) <= 1e-10


def test_singular_params_raise():
    params = CoxianParams(gamma=[1e-8], u=[])
    target = FitTarget(moments=[1.0])
    with pytest.raises(SingularMatrixError):
        loss(params, target)
    with pytest.raises(SingularMatrixError):
        gradient(params, target)


def _random_params(family, rng):
    if family == "general":
        n = int(rng.integers(1, 7))
        return GeneralParams(
            a=rng.standard_normal(n),
            gamma=rng.uniform(0.6, 1.4, n),
            Z=rng.standard_normal((n, n)),
        )
    if family == "coxian":
        n = int(rng.integers(1, 5))
        return CoxianParams(gamma=rng.uniform(0.6, 1.4, n), u=rng.standard_normal(n - 1))
    k = int(rng.integers(1, 4))
    return HyperErlangParams(
        beta=rng.standard_normal(k),
        delta=rng.uniform(0.6, 1.4, k),
        blocks=tuple(int(b) for b in rng.integers(1, 4, k)),
    )


def _random_target(family, rng, index):
    reference = to_markovian(_random_params(family, rng))
    percentiles = [] if index % 3 == 0 else [30, 50, 70]
    target = target_from_ph(reference, 4, percentiles, Q=0.05)
    if index % 4 == 1:
        mean = moments(reference, 1)[0]
        target = target.model_copy(update={"pdf_points": np.array([[mean, 0.3]]), "Q_pdf": 0.1})
    return target


@pytest.mark.parametrize("family", ["general", "coxian", "hyper-erlang"])
def test_gradient_matches_finite_differences(family):
    rng = np.random.default_rng({"general": 1, "coxian": 2, "hyper-erlang": 3}[family])
    for index in range(20):
        params = _random_params(family, rng)
        target = _random_target(family, rng, index)
        structure = structure_of(params)
        objective = Objective(target, structure)
        theta = structure.pack(params)

        value, analytic = objective(theta[None])
        plain, _ = objective(theta[None], with_gradient=False)
        assert value[0] == pytest.approx(plain[0], rel=1e-10)

        steps = 1e-6 * np.maximum(1.0, np.abs(theta))
        shifted = np.concatenate([theta + np.diag(steps), theta - np.diag(steps)])
        losses, _ = objective(shifted, with_gradient=False)
        numeric = (losses[: theta.size] - losses[theta.size :]) / (2 * steps)

        significant = np.abs(analytic[0]) > 1e-8
        np.testing.assert_allclose(
            analytic[0][significant], numeric[significant], rtol=1e-4, atol=0
        )
        np.testing.assert_allclose(
            analytic[0][~significant], numeric[~significant], atol=1e-6 * max(1.0, value[0])
        )


def test_batched_rows_are_independent(rng):
    params = [
        CoxianParams(gamma=rng.uniform(0.5, 2, 3), u=rng.standard_normal(2)) for _ in range(4)
    ]
    structure = structure_of(params[0])
    target = FitTarget(moments=[1.0, 3.0, 12.0], cdf_points=[[1.0, 0.5]])
    population = np.stack([structure.pack(p) for p in params])
    losses, _ = Objective(target, structure)(population)
    for row, p in enumerate(params):
        assert losses[row] == pytest.approx(loss(p, target), rel=1e-12)


def test_singular_candidate_yields_nan():
    structure = structure_of(UNIT_EXPONENTIAL)
    objective = Objective(FitTarget(moments=[1.0]), structure)
    population = np.array([[1.0], [0.0]])
    losses, grad = objective(population)
    assert losses[0] == 0.0
    assert np.isnan(losses[1])
    assert np.isnan(grad[1]).all()


def test_loss_scale_invariant_with_default_weights(rng):
    for _ in range(5):
        params = _random_params("coxian", rng)
        target = target_from_ph(to_markovian(_random_params("coxian", rng)), 5)
        c = float(rng.uniform(0.1, 10.0))
        scaled_target = FitTarget(moments=target.moments * c ** np.arange(1, 6))
        # rates divided by c scale every moment by c^i
        scaled_params = CoxianParams(gamma=params.gamma / math.sqrt(c), u=params.u)
        assert loss(scaled_params, scaled_target) == pytest.approx(loss(params, target), rel=1e-9)


def test_rescale_target_preserves_loss(rng):
    reference = to_markovian(_random_params("coxian", rng))
    target = target_from_ph(reference, 4, [30, 50, 70], weights=[1.0, 2.0, 3.0, 4.0])
    target = FitTarget(
        moments=target.moments * 3.0 ** np.arange(1, 5),
        weights=target.weights,
        cdf_points=target.cdf_points * [3.0, 1.0],
        pdf_points=[[2.0, 0.1]],
        Q_pdf=0.2,
    )
    scaled, scale = rescale_target(target)
    assert scale == pytest.approx(target.moments[0])
    assert scaled.moments[0] == pytest.approx(1.0)

    params = _random_params("coxian", rng)
    candidate = to_markovian(params)
    objective = Objective(scaled, structure_of(params))
    restored = to_markovian(restore_scale(params, scale))
    original = Objective(target, structure_of(params)).evaluate(
        restored.alpha[None], restored.T[None]
    )
    value = objective.evaluate(candidate.alpha[None], candidate.T[None])
    assert value[0][0] == pytest.approx(original[0][0], rel=1e-9)


def test_shape_percentiles():
    assert shape_percentiles(0) == []
    assert shape_percentiles(3) == [30, 50, 70]
    assert shape_percentiles(5) == [10, 30, 50, 70, 90]
    twenty = shape_percentiles(20)
    assert len(twenty) == 20
    assert twenty[0] == 1.0 and twenty[15] == 25.0 and twenty[-1] == 60.0
    assert shape_percentiles(1) == [50.0]


def test_target_from_ph():
    target = target_from_ph(exponential(1.0), 3, [50])
    np.testing.assert_allclose(target.moments, [1, 2, 6])
    assert target.cdf_points[0, 0] == pytest.approx(math.log(2), rel=1e-9)
    assert cdf(exponential(1.0), target.cdf_points[0, 0]) == pytest.approx(0.5, abs=1e-10)
