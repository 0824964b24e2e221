import numpy as np
import pytest
from scipy import stats

from phfit.core.distribution import is_valid, moments

from .archive import load_moments_table, load_testset, write_testset
from .generators import (
    generate_testset,
    sample_composition,
    sample_coxian,
    sample_general,
    sample_hypererlang,
)
from .models import SampleSpec


def test_one_phase_samples_are_exponential(rng):
    for _ in range(50):
        general = sample_general(1, rng)
        assert 0.01 <= -general.T[0, 0] <= 100.0
        coxian = sample_coxian(1, rng)
        assert 0.1 <= -coxian.T[0, 0] <= 10.0
        single = sample_hypererlang(1, rng)
        assert single.n == 1
        np.testing.assert_array_equal(single.alpha, [1.0])


@pytest.mark.parametrize("sampler", [sample_general, sample_coxian, sample_hypererlang])
def test_samples_are_valid(sampler, rng):
    for n in [1, 2, 3, 5, 8, 13, 40]:
        for _ in range(10):
            ph = sampler(n, rng)
            assert ph.n == n
            assert is_valid(ph)


@pytest.mark.statistical
def test_general_zero_counts_are_uniform(rng):
    counts = np.zeros(21, dtype=int)
    for _ in range(1000):
        ph = sample_general(5, rng)
        off_diagonal = ph.T[~np.eye(5, dtype=bool)]
        counts[int(np.sum(off_diagonal == 0.0))] += 1
    _, p_value = stats.chisquare(counts)
    assert p_value > 0.01


@pytest.mark.statistical
def test_coxian_first_probability_mean(rng):
    draws = [sample_coxian(2, rng) for _ in range(10**4)]
    probabilities = [ph.T[0, 1] / -ph.T[0, 0] for ph in draws]
    assert np.mean(probabilities) == pytest.approx(0.5, abs=0.02)


@pytest.mark.statistical
def test_compositions_are_uniform(rng):
    seen = {}
    for _ in range(10**4):
        blocks = tuple(sample_composition(4, 2, rng))
        seen[blocks] = seen.get(blocks, 0) + 1
    assert set(seen) == {(1, 3), (2, 2), (3, 1)}
    for frequency in seen.values():
        assert frequency / 10**4 == pytest.approx(1 / 3, abs=0.02)


def test_composition_sums(rng):
    for _ in range(200):
        n = int(rng.integers(1, 50))
        k = int(rng.integers(1, n + 1))
        blocks = sample_composition(n, k, rng)
        assert blocks.sum() == n
        assert blocks.size == k
        assert np.all(blocks >= 1)


@pytest.mark.parametrize("family", ["general", "coxian", "hyper-erlang"])
def test_testset_is_mean_normalized(family):
    spec = SampleSpec(family=family, size_range=(1, 12), count=30, seed=11)
    for instance in generate_testset(spec):
        assert instance.moments.shape == (20,)
        assert instance.moments[0] == pytest.approx(1.0, abs=1e-9)
        assert np.all(np.isfinite(instance.moments)) and np.all(instance.moments > 0)
        assert 1 <= instance.n <= 12
        assert is_valid(instance.ph)
        np.testing.assert_allclose(moments(instance.ph, 3), instance.moments[:3], rtol=1e-12)


def test_testset_is_deterministic():
    spec = SampleSpec(family="general", size_range=(1, 6), count=8, seed=1)
    first = generate_testset(spec)
    second = generate_testset(spec, workers=3)
    for a, b in zip(first, second):
        assert a.id == b.id
        np.testing.assert_array_equal(a.ph.T, b.ph.T)
        np.testing.assert_array_equal(a.moments, b.moments)


@pytest.mark.statistical
def test_coxian_second_moments_in_observed_range():
    spec = SampleSpec(family="coxian", count=500, seed=3)
    second = np.array([instance.moments[1] for instance in generate_testset(spec)])
    inside = np.mean((second >= 1.005) & (second <= 384.63))
    assert inside >= 0.95


def test_archive_round_trip(tmp_path):
    spec = SampleSpec(family="hyper-erlang", size_range=(2, 6), count=5, seed=4)
    instances = generate_testset(spec)
    write_testset(instances, spec, tmp_path / "set")

    loaded, manifest = load_testset(tmp_path / "set")
    assert manifest.seed == 4
    assert manifest.spec == spec
    assert [i.id for i in loaded] == [i.id for i in instances]
    np.testing.assert_array_equal(loaded[2].ph.T, instances[2].ph.T)

    table = load_moments_table(tmp_path / "set")
    assert list(table.columns[:21]) == ["id"] + [f"m{i}" for i in range(1, 21)]
    assert {"scv", "skewness", "kurtosis"} <= set(table.columns)
    np.testing.assert_array_equal(table["m5"].to_numpy(), [i.moments[4] for i in instances])


def test_archive_is_byte_identical(tmp_path):
    spec = SampleSpec(family="general", size_range=(1, 5), count=10, seed=1)
    for name in ["a", "b"]:
        write_testset(generate_testset(spec), spec, tmp_path / name)
    for path in sorted((tmp_path / "a").rglob("*")):
        if path.is_file():
            twin = tmp_path / "b" / path.relative_to(tmp_path / "a")
            assert path.read_bytes() == twin.read_bytes()
