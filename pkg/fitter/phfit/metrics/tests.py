import math

import numpy as np
import pytest

from phfit.common.exceptions import MetricsInputError
from phfit.core.distribution import erlang, exponential

from .models import EvalRecord, QuadratureSpec
from .report import evaluation_table, success_column, summarize
from .scores import accumulated_error, accumulated_errors, kl_divergence, mape, success_rate


def _record(max_mape, **fields):
    instance_id = fields.pop("instance_id", "x")
    return EvalRecord(instance_id=instance_id, target=[1.0], max_mape=max_mape, **fields)


def test_mape_examples():
    np.testing.assert_allclose(mape([100], [101]), [1.0])
    np.testing.assert_array_equal(mape([1, 2, 6], [1, 2, 6]), [0, 0, 0])
    np.testing.assert_allclose(mape([1, 2, 6], [1.01, 1.98, 6.3]), [1.0, 1.0, 5.0])


def test_mape_rejects_bad_input():
    with pytest.raises(MetricsInputError):
        mape([1, 2], [1])
    with pytest.raises(MetricsInputError):
        mape([0, 2], [1, 2])


def test_mape_scale_invariant():
    target = np.array([1.0, 3.0, 15.0])
    fitted = np.array([1.1, 2.7, 16.0])
    powers = 7.0 ** np.arange(1, 4)
    np.testing.assert_allclose(mape(target * powers, fitted * powers), mape(target, fitted))


def test_success_rate_examples():
    records = [_record(0.1)] * 450 + [_record(2.0)] * 50
    assert success_rate(records, 1.0) == 90.0
    assert success_rate([_record(0.0)] * 3, 1e-6) == 100.0
    assert success_rate([_record(0.1), _record(0.3), _record(0.7)], 0.5) == pytest.approx(200 / 3)
    with pytest.raises(MetricsInputError):
        success_rate([], 1.0)


def test_success_rate_monotone_in_eta():
    records = [_record(value) for value in np.linspace(0, 2, 21)]
    rates = [success_rate(records, eta) for eta in (0.2, 0.5, 1.0)]
    assert rates == sorted(rates)


def test_accumulated_error():
    assert accumulated_error([0.5, 0.5], [0.6, 0.4], 1) == pytest.approx(0.2)
    assert accumulated_error([0.2, 0.8], [0.2, 0.8], 1) == 0.0
    with pytest.raises(MetricsInputError):
        accumulated_error([0.5, 0.5], [0.6, 0.4], 2)

    rng = np.random.default_rng(0)
    p, p_hat = rng.dirichlet(np.ones(10)), rng.dirichlet(np.ones(10))
    totals = accumulated_errors(p, p_hat)
    assert np.all(np.diff(totals) >= 0)
    assert totals[-1] == pytest.approx(np.abs(p - p_hat).sum())


def test_kl_identical_is_zero():
    assert abs(kl_divergence(erlang(3, 2.0), erlang(3, 2.0))) <= 1e-6


def test_kl_exponential_closed_form():
    expected = math.log(0.5) + 2.0 - 1.0
    assert kl_divergence(exponential(1.0), exponential(2.0)) == pytest.approx(expected, abs=1e-4)


def test_kl_nonnegative(dense_ph_factory):
    for seed in range(20):
        p = dense_ph_factory(size=3, seed=500 + seed)
        q = dense_ph_factory(size=2, seed=700 + seed)
        assert kl_divergence(p, q, QuadratureSpec(panels=2000)) >= -1e-6


def test_evaluation_table_and_summary():
    records = [
        _record(0.1, instance_id="a", family="coxian", structure="hyper-erlang", n=20, l=5),
        _record(0.7, instance_id="b", family="coxian", structure="hyper-erlang", n=20, l=5),
        _record(0.0, instance_id="a", family="coxian", structure="coxian", n=10, l=5),
        EvalRecord(
            instance_id="b", family="coxian", structure="coxian", n=10, l=5, target=[1.0],
            error="all candidates failed",
        ),
    ]
    table = evaluation_table(records)
    assert len(table) == 4
    assert list(table.columns[:6]) == ["instance", "family", "structure", "n", "l", "max_mape"]

    summary = summarize(table).set_index("structure")
    assert summary.loc["hyper-erlang", success_column(0.2)] == 50.0
    assert summary.loc["hyper-erlang", success_column(1.0)] == 100.0
    assert summary.loc["coxian", success_column(0.5)] == 50.0
    assert summary.loc["coxian", "failures"] == 1
    for _, row in summary.iterrows():
        assert row[success_column(0.2)] <= row[success_column(0.5)] <= row[success_column(1.0)]
