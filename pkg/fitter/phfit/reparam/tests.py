import math

import numpy as np
import pytest

from phfit.common.exceptions import InteriorViolationError
from phfit.core.distribution import erlang, is_valid, moments
from phfit.core.models import MarkovianPH
from phfit.utils.numerics import sigmoid, softmax

from .maps import (
    coxian_ph,
    from_markovian_coxian,
    from_markovian_general,
    from_markovian_hypererlang,
    hypererlang_ph,
    jitter,
    to_markovian,
    to_markovian_coxian,
    to_markovian_general,
    to_markovian_hypererlang,
)
from .models import CoxianParams, GeneralParams, HyperErlangParams, ParamsDocument
from .structures import (
    CoxianStructure,
    GeneralStructure,
    HyperErlangStructure,
    default_blocks,
    structure_for,
    structure_of,
)


def test_general_one_phase_is_exponential():
    ph = to_markovian_general(GeneralParams(a=[0.0], gamma=[1.0], Z=[[0.0]]))
    np.testing.assert_allclose(ph.alpha, [1.0])
    np.testing.assert_allclose(ph.T, [[-1.0]])


def test_general_saturated_logits():
    params = GeneralParams(a=[100.0, 1.0, 1.0], gamma=np.ones(3), Z=np.zeros((3, 3)))
    ph = to_markovian_general(params)
    assert ph.alpha[1] == pytest.approx(math.exp(-99), rel=1e-9)
    assert ph.alpha[0] == pytest.approx(1.0)
    assert is_valid(ph)


def test_general_rows_respect_outflow_rate(rng):
    for _ in range(20):
        n = int(rng.integers(1, 8))
        params = GeneralParams(
            a=rng.standard_normal(n), gamma=rng.uniform(0.2, 3, n), Z=rng.standard_normal((n, n))
        )
        ph = to_markovian_general(params)
        assert is_valid(ph)
        # exit share is the self-mass of softmax(Z)
        exit_share = ph.exit_vector / params.gamma**2
        np.testing.assert_allclose(exit_share, np.diag(softmax(params.Z)), rtol=1e-12)


def test_general_round_trip_exponential_rate_four():
    params = from_markovian_general(MarkovianPH(alpha=[1.0], T=[[-4.0]]))
    np.testing.assert_allclose(params.gamma, [2.0])
    np.testing.assert_allclose(params.a, [0.0])
    np.testing.assert_allclose(params.Z, [[0.0]])
    np.testing.assert_array_equal(to_markovian_general(params).T, [[-4.0]])


def _interior_general(rng, n):
    alpha = rng.dirichlet(np.ones(n))
    T = rng.uniform(0.1, 2.0, (n, n))
    np.fill_diagonal(T, 0.0)
    exits = rng.uniform(0.1, 2.0, n)
    np.fill_diagonal(T, -(T.sum(axis=1) + exits))
    return MarkovianPH(alpha=alpha, T=T)


def test_general_round_trip(rng):
    for _ in range(100):
        ph = _interior_general(rng, int(rng.integers(1, 11)))
        back = to_markovian_general(from_markovian_general(ph))
        np.testing.assert_allclose(back.alpha, ph.alpha, atol=1e-10)
        np.testing.assert_allclose(back.T, ph.T, atol=1e-10)


def test_general_inverse_rejects_boundary():
    with pytest.raises(InteriorViolationError) as error:
        from_markovian_general(MarkovianPH(alpha=[1.0, 0.0], T=[[-2.0, 1.0], [1.0, -2.0]]))
    assert error.value.field == "alpha"
    assert error.value.index == (1,)

    with pytest.raises(InteriorViolationError) as error:
        from_markovian_general(MarkovianPH(alpha=[0.5, 0.5], T=[[-2.0, 0.0], [1.0, -2.0]]))
    assert error.value.field == "T"


def test_coxian_examples():
    np.testing.assert_allclose(to_markovian_coxian(CoxianParams(gamma=[1.0], u=[])).T, [[-1.0]])

    ph = to_markovian_coxian(CoxianParams(gamma=[1.0, 1.0], u=[0.0]))
    np.testing.assert_allclose(ph.T, [[-1.0, 0.5], [0.0, -1.0]])
    np.testing.assert_allclose(ph.alpha, [1.0, 0.0])

    chain = to_markovian_coxian(CoxianParams(gamma=[math.sqrt(2), math.sqrt(3)], u=[50.0]))
    assert moments(chain, 1)[0] == pytest.approx(1 / 2 + 1 / 3, abs=1e-9)


def test_coxian_inverse_examples():
    params = from_markovian_coxian([4.0], [])
    np.testing.assert_allclose(params.gamma, [2.0])
    assert params.u.shape == (0,)
    np.testing.assert_allclose(from_markovian_coxian([1.0, 1.0], [0.5]).u, [0.0], atol=1e-15)

    with pytest.raises(InteriorViolationError):
        from_markovian_coxian([1.0, 1.0], [1.0])


def test_coxian_round_trip(rng):
    for _ in range(100):
        n = int(rng.integers(1, 11))
        rates = rng.uniform(0.1, 10, n)
        probabilities = rng.uniform(0.01, 0.99, n - 1)
        ph = coxian_ph(rates, probabilities)
        back = to_markovian_coxian(from_markovian_coxian(rates, probabilities))
        np.testing.assert_allclose(back.T, ph.T, atol=1e-10)
        np.testing.assert_array_equal(back.alpha, ph.alpha)


def test_hypererlang_examples():
    single = to_markovian_hypererlang(HyperErlangParams(beta=[0.0], delta=[1.0], blocks=(1,)))
    np.testing.assert_allclose(single.T, [[-1.0]])

    mixture = to_markovian_hypererlang(
        HyperErlangParams(beta=[0.0, 0.0], delta=[1.0, math.sqrt(2)], blocks=(1, 1))
    )
    np.testing.assert_allclose(mixture.alpha, [0.5, 0.5])
    assert moments(mixture, 1)[0] == pytest.approx(0.75)

    erlang4 = to_markovian_hypererlang(
        HyperErlangParams(beta=[0.0], delta=[math.sqrt(2)], blocks=(4,))
    )
    np.testing.assert_allclose(erlang4.T, erlang(4, 2.0).T, atol=1e-14)
    np.testing.assert_allclose(moments(erlang4, 2), [2.0, 5.0], rtol=1e-12)


def test_hypererlang_blocks_do_not_chain():
    ph = hypererlang_ph([0.5, 0.5], [1.0, 2.0], [2, 3])
    assert ph.T[1, 2] == 0.0
    assert ph.T[0, 1] == 1.0
    np.testing.assert_allclose(ph.alpha, [0.5, 0, 0.5, 0, 0])


def test_hypererlang_inverse():
    params = from_markovian_hypererlang([1.0], [1.0], [1])
    np.testing.assert_allclose(params.beta, [0.0])
    np.testing.assert_allclose(params.delta, [1.0])

    with pytest.raises(InteriorViolationError):
        from_markovian_hypererlang([1.0, 0.0], [1.0, 2.0], [2, 3])


def test_hypererlang_round_trip(rng):
    for _ in range(100):
        k = int(rng.integers(1, 5))
        blocks = rng.integers(1, 4, k)
        weights = rng.dirichlet(np.ones(k))
        rates = rng.uniform(0.1, 10, k)
        ph = hypererlang_ph(weights, rates, blocks)
        back = to_markovian_hypererlang(from_markovian_hypererlang(weights, rates, blocks))
        np.testing.assert_allclose(back.alpha, ph.alpha, atol=1e-10)
        np.testing.assert_allclose(back.T, ph.T, atol=1e-10)


def test_params_validation():
    with pytest.raises(ValueError):
        GeneralParams(a=[0.0], gamma=[0.0], Z=[[0.0]])
    with pytest.raises(ValueError):
        CoxianParams(gamma=[1.0, 1.0], u=[])
    with pytest.raises(ValueError):
        HyperErlangParams(beta=[0.0], delta=[1.0], blocks=(0,))


def test_params_document_discriminates_structure():
    document = ParamsDocument.model_validate_json(
        '{"params": {"structure": "coxian", "gamma": [1.0, 2.0], "u": [0.5]}}'
    )
    assert isinstance(document.params, CoxianParams)
    np.testing.assert_array_equal(document.params.gamma, [1.0, 2.0])

    restored = ParamsDocument.model_validate_json(document.model_dump_json())
    assert restored.params.structure == "coxian"
    np.testing.assert_array_equal(restored.params.u, [0.5])


@pytest.mark.parametrize("x", np.linspace(-30, 30, 61))
def test_sigmoid_matches_naive(x):
    assert sigmoid(x) == pytest.approx(1.0 / (1.0 + math.exp(-x)), abs=1e-15)


def test_softmax_matches_naive(rng):
    for _ in range(20):
        x = rng.uniform(-30, 30, 6)
        naive = np.exp(x) / np.exp(x).sum()
        np.testing.assert_allclose(softmax(x), naive, atol=1e-15)


def test_softmax_survives_huge_logits():
    np.testing.assert_allclose(softmax(np.array([1000.0, 0.0])), [1.0, 0.0])


def test_jitter_moves_boundary_inside():
    ph = erlang(3, 2.0)
    moved = jitter(ph)
    assert is_valid(moved)
    np.testing.assert_allclose(np.diag(moved.T), np.diag(ph.T))
    assert np.all(moved.alpha > 0)
    assert np.all(moved.exit_vector > 0)
    params = from_markovian_general(moved)
    np.testing.assert_allclose(to_markovian(params).T, moved.T, atol=1e-10)
    np.testing.assert_allclose(moments(moved, 3), moments(ph, 3), rtol=1e-9)


@pytest.mark.parametrize(
    "structure",
    [GeneralStructure(3), CoxianStructure(4), HyperErlangStructure((1, 2, 3))],
    ids=lambda s: s.name,
)
def test_batched_forward_matches_single_maps(structure, rng):
    population = np.stack([structure.initial(rng) for _ in range(5)])
    alpha, T = structure.forward(population)
    for row, theta in enumerate(population):
        ph = to_markovian(structure.unpack(theta))
        np.testing.assert_allclose(alpha[row], ph.alpha, atol=1e-15)
        np.testing.assert_allclose(T[row], ph.T, atol=1e-15)
        np.testing.assert_array_equal(structure.pack(structure.unpack(theta)), theta)


def test_initial_rates_in_range(rng):
    structure = CoxianStructure(1)
    rates = np.array([structure.initial(rng)[0] ** 2 for _ in range(10**4)])
    assert rates.min() >= 0.01
    assert rates.max() <= 10.0 + 1e-12


def test_structure_lookup():
    assert structure_for("hyper-erlang", n=20).blocks == (3, 4, 6, 7)
    assert sum(default_blocks(100)) == 100
    assert sum(default_blocks(50)) == 50
    assert structure_for("general", n=4).size == 24
    assert structure_for("coxian", n=4).size == 7
    assert isinstance(structure_of(CoxianParams(gamma=[1.0], u=[])), CoxianStructure)
