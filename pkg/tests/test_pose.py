import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given

from slowelm.pose import (
    PoseLabel,
    VoteState,
    balance_by_duplication,
    classify_single,
    encode_target,
    encode_targets,
    pose_bin,
    pose_bins_array,
    sliding_votes,
    vote,
    vote_decide,
    vote_update,
)

angles = st.floats(-1e6, 1e6, allow_nan=False)


@pytest.mark.parametrize("angle, expected", [(50.0, 1), (0.0, 0), (360.0, 0), (-10.0, 7), (44.999, 0), (45.0, 1), (359.999, 7)])
def test_pose_bin_examples(angle, expected):
    assert pose_bin(angle) == expected
    assert pose_bins_array([angle])[0] == expected


def test_pose_bin_tiny_negative_wraps_to_zero():
    assert pose_bin(-1e-300) == 0
    assert pose_bins_array([-1e-300])[0] == 0


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_pose_bin_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        pose_bin(bad)
    with pytest.raises(ValueError):
        pose_bins_array([bad])


@given(st.integers(-4 * 10**6, 4 * 10**6), st.integers(-5, 5))
def test_pose_bin_periodic(q, k):
    a = q / 4  # quarter degrees are exact, so shifting by 360k is exact too
    assert 0 <= pose_bin(a) < 8
    assert pose_bin(a + 360.0 * k) == pose_bin(a)


@given(st.lists(angles, max_size=50))
def test_scalar_and_array_agree(values):
    assert pose_bins_array(values).tolist() == [pose_bin(v) for v in values]


def test_encode_target_examples():
    e0 = encode_target(PoseLabel(0, 0), 8)
    assert e0.shape == (64,) and e0[0] == 1 and e0.sum() == 1
    assert np.argmax(encode_target(PoseLabel(7, 7), 8)) == 63
    all_targets = np.array([encode_target(PoseLabel(o, b), 8) for o in range(8) for b in range(8)])
    np.testing.assert_array_equal(all_targets, np.eye(64))


def test_label_validation():
    with pytest.raises(ValueError):
        PoseLabel(0, 8)
    with pytest.raises(ValueError):
        PoseLabel(-1, 0)
    with pytest.raises(ValueError):
        encode_target(PoseLabel(8, 0), 8)
    assert PoseLabel.from_angle(2, 100.0).flat_class == 18


@given(st.lists(st.integers(0, 63), min_size=1, max_size=30))
def test_encode_classify_round_trip(flat):
    T = encode_targets(flat, 64)
    assert [classify_single(t, 8) for t in T] == [f // 8 for f in flat]


def test_classify_examples():
    assert classify_single(np.eye(64)[13], 8) == 1
    assert classify_single(np.ones(64), 8) == 0
    assert classify_single(np.eye(64)[63], 8) == 7


def test_classify_input_checks():
    with pytest.raises(ValueError):
        classify_single(np.zeros(63), 8)
    s = np.zeros(64)
    s[3] = np.nan
    with pytest.raises(ValueError):
        classify_single(s, 8)


@given(st.lists(st.integers(-1000, 1000), min_size=16, max_size=16, unique=True), st.integers(1, 50), st.integers(-99, 99))
def test_classify_invariant_under_monotone_transform(scores, a, b):
    s = np.array(scores, dtype=np.float64)
    expected = classify_single(s, 2)
    assert classify_single(a * s + b, 2) == expected
    assert classify_single(np.tanh(s / 2000), 2) == expected


def test_vote_examples():
    assert vote([0, 0, 1], 2) == 0
    assert vote([3, 1], 4) == 1
    st_ = VoteState.empty(3)
    for o in (2, 1, 2):
        st_ = vote_update(st_, o)
    assert vote_decide(st_) == 2 and st_.samples_seen == 3


def test_vote_errors():
    with pytest.raises(ValueError):
        vote_decide(VoteState.empty(3))
    with pytest.raises(ValueError):
        vote_update(VoteState.empty(3), 3)
    with pytest.raises(ValueError):
        vote([], 3)


def test_vote_state_is_immutable():
    s0 = VoteState.empty(2)
    s1 = vote_update(s0, 1)
    assert s0.counts == (0, 0) and s1.counts == (0, 1)


@given(st.lists(st.integers(0, 4), min_size=1, max_size=40), st.randoms())
def test_vote_permutation_invariant(ids, rnd):
    shuffled = list(ids)
    rnd.shuffle(shuffled)
    assert vote(ids, 5) == vote(shuffled, 5)
    s = VoteState.empty(5)
    for o in shuffled:
        s = vote_update(s, o)
    assert vote_decide(s) == vote(ids, 5)


@given(st.lists(st.integers(0, 3), max_size=60), st.integers(1, 10))
def test_sliding_votes_match_direct(decisions, n):
    got = sliding_votes(decisions, n, 4)
    expected = [vote(decisions[i : i + n], 4) for i in range(len(decisions) - n + 1)]
    assert got.tolist() == expected


def test_sliding_single_view_is_identity():
    d = [3, 1, 2, 0]
    assert sliding_votes(d, 1, 4).tolist() == d


def test_balance_examples():
    idx = balance_by_duplication([0, 0, 0, 1], seed=0)
    assert np.bincount(np.array([0, 0, 0, 1])[idx]).tolist() == [3, 3]
    assert set(idx[4:].tolist()) == {3}
    assert balance_by_duplication([0, 1, 2, 1, 0, 2], 0).tolist() == list(range(6))


def test_balance_membership():
    cls = np.array([0] * 5 + [1] * 2 + [2] * 4)
    idx = balance_by_duplication(cls, 7)
    assert np.bincount(cls[idx]).tolist() == [5, 5, 5]
    assert idx[: len(cls)].tolist() == list(range(len(cls)))
    for extra in idx[len(cls):]:
        assert cls[extra] in (1, 2)


def test_balance_empty_class_named():
    with pytest.raises(ValueError, match="class 1"):
        balance_by_duplication([0, 2], 0, num_classes=3)


@given(st.lists(st.integers(0, 5), min_size=1, max_size=80), st.integers(0, 1000))
def test_balance_properties(classes, seed):
    cls = np.array(classes)
    idx = balance_by_duplication(cls, seed)
    counts = np.bincount(cls[idx])
    present = np.unique(cls)
    assert set(counts[present]) == {np.bincount(cls).max()}
    np.testing.assert_array_equal(idx, balance_by_duplication(cls, seed))
