import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import nms_scan, window_sum
from timepoint.keypoints import (
    KeypointSet,
    detect,
    detect_by_mass,
    extract_keypoints,
    keypoint_budget,
    keypoint_f1,
    nms,
    select_keypoints,
)


def test_nms_example():
    assert nms([0.9, 0.8, 0.1, 0.95, 0.2]).indices.tolist() == [0, 3]


def test_nms_single_nonzero():
    s = np.zeros(20)
    s[7] = 0.4
    assert 7 in nms(s).indices


def test_nms_increasing_keeps_last():
    assert nms(np.linspace(0, 1, 30)).indices.tolist() == [29]


def test_nms_tie_goes_to_lower_index():
    assert nms([0.0, 0.5, 0.5, 0.0, 0.0]).indices.tolist() == [1]


def test_nms_window_must_be_odd():
    with pytest.raises(ValueError):
        nms([0.1, 0.2], window=4)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=40))
def test_nms_matches_scan(values):
    # small integer scores force plenty of ties
    s = np.asarray(values, dtype=float) / 6
    assert nms(s).indices.tolist() == nms_scan(s.tolist())


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=60))
def test_nms_gap_and_idempotence(values):
    s = np.asarray(values)
    kp = nms(s)
    assert np.all(np.diff(kp.indices) >= 3)
    filtered = np.zeros_like(s)
    filtered[kp.indices] = s[kp.indices]
    again = nms(filtered).indices
    # survivors stay survivors; zero padding can only add zero-score points
    assert set(kp.indices) <= set(again)
    assert set(again) - set(kp.indices) <= set(np.flatnonzero(filtered == 0))


def test_select_examples():
    kp = KeypointSet(np.array([3, 10, 20]), np.array([0.9, 0.4, 0.7]), 100)
    assert select_keypoints(kp, 0.02).indices.tolist() == [3, 20]
    assert select_keypoints(kp, 1.0).indices.tolist() == [3, 10, 20]
    ten = KeypointSet(np.arange(0, 50, 5), np.linspace(0.1, 1, 10), 512)
    assert len(select_keypoints(ten, 0.1)) == 10
    with pytest.raises(ValueError):
        select_keypoints(KeypointSet(np.array([], int), np.array([]), 10), 0.5)


def test_budget():
    assert keypoint_budget(0.1, 512) == 52
    assert keypoint_budget(0.2, 800) == 160
    assert keypoint_budget(0.2, 512) == 103
    with pytest.raises(ValueError):
        keypoint_budget(0.0, 10)


def test_extract_fills_budget_and_keeps_time_order():
    s = np.random.default_rng(0).random(512)
    for ratio in (0.1, 0.2, 0.5, 1.0):
        idx = extract_keypoints(s, ratio)
        assert len(idx) == keypoint_budget(ratio, 512)
        assert np.all(np.diff(idx) > 0)
    assert np.array_equal(extract_keypoints(s, 1.0), np.arange(512))


def test_extract_prefers_nms_survivors():
    s = np.random.default_rng(1).random(200)
    survivors = nms(s).indices
    idx = extract_keypoints(s, len(survivors) / 200)
    assert np.array_equal(idx, survivors)


def test_f1():
    assert keypoint_f1([10, 50], [11, 49]) == (1.0, 1.0, 1.0)
    p, r, f = keypoint_f1([10, 90], [13, 90, 200])
    assert (p, r) == (0.5, 1 / 3)
    assert f == pytest.approx(0.4)
    assert keypoint_f1([], [1])[2] == 0.0
    # one prediction cannot match two truths
    assert keypoint_f1([10], [9, 11])[1] == 0.5


def test_detect_threshold():
    s = np.zeros(30)
    s[[5, 15, 25]] = [0.9, 0.3, 0.6]
    assert detect(s, 0.5).tolist() == [5, 25]


def test_detect_by_mass_matches_scan_and_window_sum():
    rng = np.random.default_rng(5)
    for _ in range(20):
        s = rng.uniform(0, 0.3, 80)
        mass = window_sum(s, 2)
        want = [t for t in nms_scan(s, 5) if mass[t] >= 0.5]
        assert detect_by_mass(s).tolist() == want


def test_detect_by_mass_spread_peak():
    s = np.zeros(20)
    s[8:13] = [0.1, 0.15, 0.2, 0.15, 0.1]
    assert detect_by_mass(s).tolist() == [10]
    assert detect_by_mass(s, threshold=0.8).tolist() == []
