import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from ecrasim.traffic import ArrivalStream, generate_arrivals, place_replicas, replica_offsets


def test_zero_load_is_empty():
    assert len(generate_arrivals(0.0, 1e4, np.random.default_rng(0))) == 0


def test_count_matches_poisson_mean():
    n = len(generate_arrivals(1.0, 1e6, np.random.default_rng(1)))
    assert abs(n - 1e6) < 4e3


def test_gaps_are_exponential():
    t0 = generate_arrivals(0.5, 1e6, np.random.default_rng(2)).t0
    gaps = np.diff(t0)
    assert stats.kstest(gaps, "expon", args=(0, 1 / 0.5)).pvalue > 0.01


def test_arrivals_sorted_and_ids_dense():
    s = generate_arrivals(2.0, 100.0, np.random.default_rng(3))
    assert np.all(np.diff(s.t0) > 0)
    assert list(s.user_ids) == list(range(len(s)))


@pytest.mark.parametrize("g, dur", [(float("nan"), 10.0), (1.0, float("inf")), (-1.0, 10.0), (1.0, 0.0)])
def test_bad_arrival_inputs(g, dur):
    with pytest.raises(ValueError):
        generate_arrivals(g, dur, np.random.default_rng(0))


def test_degree_one_is_t0():
    assert place_replicas(7.5, 1, 200, np.random.default_rng(0)) == [7.5]


def test_second_replica_uniform():
    off = replica_offsets(100_000, 2, 200, np.random.default_rng(4))[:, 1]
    assert off.min() >= 1.0 and off.max() <= 199.0
    assert abs(off.mean() - 100.0) < 0.5
    assert stats.kstest(off, "uniform", args=(1.0, 198.0)).pvalue > 0.01


def test_tight_packing_is_unique():
    assert place_replicas(3.0, 3, 3, np.random.default_rng(0)) == [3.0, 4.0, 5.0]


def test_vf_too_short():
    with pytest.raises(ValueError):
        replica_offsets(1, 3, 2, np.random.default_rng(0))


def test_placement_invariants_bulk():
    rng = np.random.default_rng(5)
    for degree, vf in [(2, 200), (3, 10), (4, 6)]:
        off = replica_offsets(1_000_000 // degree, degree, vf, rng)
        assert np.all(off[:, 0] == 0)
        assert np.all(np.diff(off, axis=1) >= 1.0)
        assert np.all(off[:, -1] <= vf - 1)


def test_three_replica_law_matches_rejection_sampler():
    # reference: plain rejection sampling of the conditional law
    rng = np.random.default_rng(6)
    vf = 8
    ref = []
    while len(ref) < 20_000:
        x = np.sort(rng.uniform(1.0, vf - 1.0, size=2))
        if x[1] - x[0] >= 1.0:
            ref.append(x)
    ref = np.array(ref)
    fast = replica_offsets(20_000, 3, vf, np.random.default_rng(7))[:, 1:]
    for col in range(2):
        assert stats.ks_2samp(ref[:, col], fast[:, col]).pvalue > 0.001


@given(st.integers(0, 2**32 - 1))
def test_determinism(seed):
    a = replica_offsets(50, 3, 20, np.random.default_rng(seed))
    b = replica_offsets(50, 3, 20, np.random.default_rng(seed))
    assert np.array_equal(a, b)


def test_from_users_layout():
    s = ArrivalStream.from_users([[1.0, 5.0], [2.0, 9.0]])
    assert s.t0.tolist() == [1.0, 2.0]
    assert s.offsets.tolist() == [[0.0, 4.0], [0.0, 7.0]]
    with pytest.raises(ValueError):
        ArrivalStream.from_users([[3.0, 5.0], [2.0, 9.0]])
