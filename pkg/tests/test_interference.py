import numpy as np
import pytest
from hypothesis import given, strategies as st

from ecrasim.interference import (
    InterferenceProfile,
    Timeline,
    build_profile,
    deactivate_user,
    overlap_profile,
)

from conftest import random_timeline


def brute_counts(timeline, rid, n=10_000):
    s = timeline.replicas[rid].start
    x = s + (np.arange(n) + 0.5) / n
    c = np.zeros(n, dtype=int)
    owner = timeline.replicas[rid].user_id
    for j, rep in enumerate(timeline.replicas):
        if j != rid and timeline.active[j] and rep.user_id != owner:
            c += (x >= rep.start) & (x < rep.start + 1.0)
    return x - s, c


def test_isolated():
    assert overlap_profile(5.0, []).segments == ((0.0, 0),)


def test_half_overlap_from_right():
    assert overlap_profile(0.0, [0.5]).segments == ((0.0, 0), (0.5, 1))


def test_two_sided():
    assert overlap_profile(0.0, [-0.25, 0.25]).segments == ((0.0, 1), (0.25, 2), (0.75, 1))


def test_two_sided_matches_grid():
    tl = Timeline.from_users({0: [10.0], 1: [9.75], 2: [10.25]})
    prof = build_profile(tl, 0)
    x, c = brute_counts(tl, 0)
    assert all(prof.count_at(xi) == ci for xi, ci in zip(x, c))


def test_coincident_and_touching():
    # identical start counts for the whole extent; touching ends never overlap
    assert overlap_profile(0.0, [0.0]).segments == ((0.0, 1),)
    assert overlap_profile(0.0, [1.0, -1.0]).segments == ((0.0, 0),)


@pytest.mark.parametrize("segs", [((0.1, 0),), ((0.0, 1), (0.0, 2)), ((0.0, 1), (0.5, 1)), ((0.0, -1),), ((0.0, 0), (1.0, 1))])
def test_malformed_profiles(segs):
    with pytest.raises(ValueError):
        InterferenceProfile(segs)


def test_lengths_cover_unit():
    p = overlap_profile(0.0, [-0.3, 0.2, 0.7])
    assert sum(m for m, _ in p.lengths()) == pytest.approx(1.0)


def test_unknown_and_inactive_replica(cascade_timeline):
    with pytest.raises(KeyError):
        build_profile(cascade_timeline, 99)
    deactivate_user(cascade_timeline, 2)
    with pytest.raises(ValueError):
        build_profile(cascade_timeline, cascade_timeline.replicas_of(2)[0])


def test_user_replicas_may_not_overlap():
    tl = Timeline()
    with pytest.raises(ValueError):
        tl.add_user(0, [1.0, 1.5])
    tl.add_user(0, [1.0, 2.0])
    with pytest.raises(ValueError):
        tl.add_user(0, [5.0])


def test_deactivate_isolated():
    tl = Timeline.from_users({0: [0.0, 10.0], 1: [50.0, 60.0]})
    assert deactivate_user(tl, 0) == set()


def test_cascade_cancelling_c_touches_only_a2(cascade_timeline):
    a2 = cascade_timeline.replicas_of(0)[1]
    assert deactivate_user(cascade_timeline, 2) == {a2}
    assert build_profile(cascade_timeline, a2).segments == ((0.0, 0),)


def test_second_deactivation_signalled(cascade_timeline):
    assert deactivate_user(cascade_timeline, 2) is not None
    assert deactivate_user(cascade_timeline, 2) is None


@given(st.integers(0, 2**32 - 1))
def test_profile_matches_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    tl = random_timeline(rng, n_users=int(rng.integers(2, 60)), span=10.0, degree=2, vf_len=5)
    for rid in rng.choice(len(tl.replicas), size=min(5, len(tl.replicas)), replace=False):
        prof = build_profile(tl, int(rid))
        x, c = brute_counts(tl, int(rid))
        offs = np.array([s[0] for s in prof.segments])
        # skip samples within float noise of a breakpoint
        near = np.min(np.abs(x[:, None] - np.append(offs, 1.0)[None, :]), axis=1) < 1e-9
        got = np.array([prof.count_at(xi) for xi in x])
        assert np.array_equal(got[~near], c[~near])


@given(st.integers(0, 2**32 - 1))
def test_deactivation_is_monotone(seed):
    rng = np.random.default_rng(seed)
    tl = random_timeline(rng, n_users=15, span=6.0)
    order = rng.permutation(15)
    for u in order[:10]:
        before = {r: build_profile(tl, r) for r in range(len(tl.replicas)) if tl.active[r]}
        affected = deactivate_user(tl, int(u))
        grid = (np.arange(200) + 0.5) / 200
        for r, old in before.items():
            if not tl.active[r]:
                continue
            new = build_profile(tl, r)
            changed = False
            for x in grid:
                assert 0 <= new.count_at(x) <= old.count_at(x)
                changed |= new.count_at(x) != old.count_at(x)
            if changed:
                assert r in affected


@given(st.integers(0, 2**32 - 1))
def test_interference_conservation(seed):
    rng = np.random.default_rng(seed)
    tl = random_timeline(rng, n_users=20, span=8.0, degree=3, vf_len=6)
    for u in rng.choice(20, size=5, replace=False):
        deactivate_user(tl, int(u))
    act = [r for r in range(len(tl.replicas)) if tl.active[r]]
    total = sum(build_profile(tl, r).integral() for r in act)
    pairwise = 0.0
    for i, a in enumerate(act):
        for b in act[i + 1:]:
            ra, rb = tl.replicas[a], tl.replicas[b]
            if ra.user_id != rb.user_id:
                pairwise += max(0.0, 1.0 - abs(ra.start - rb.start))
    assert total == pytest.approx(2.0 * pairwise, rel=1e-9, abs=1e-12)
