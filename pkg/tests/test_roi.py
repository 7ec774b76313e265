import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import assume, given
from scipy.ndimage import binary_dilation

from slowelm.events import EventWindow
from slowelm.roi import (
    RoiBox,
    RoiTracker,
    binarize,
    estimate_spatial_roi,
    resize_square,
    roi_from_points,
    to_input_vector,
)


def window(x, y):
    n = len(x)
    return EventWindow(np.arange(n), np.asarray(x), np.asarray(y), np.ones(n, np.int8), 0, 0)


def trim_oracle(v, frac):
    """Per side of the mean: the farthest of the ceil(frac * n) values nearest the mean."""
    c = np.mean(v)
    lo_side = sorted((u for u in v if u < c), key=lambda u: c - u)
    hi_side = sorted((u for u in v if u > c), key=lambda u: u - c)
    lo = lo_side[math.ceil(frac * len(lo_side)) - 1] if lo_side else min(v)
    hi = hi_side[math.ceil(frac * len(hi_side)) - 1] if hi_side else max(v)
    return lo, hi


points = st.lists(st.tuples(st.integers(0, 127), st.integers(0, 127)), min_size=1, max_size=200)


def test_single_pixel_expands_to_2x2():
    res = estimate_spatial_roi(window([5] * 10, [5] * 10))
    assert (res.box.width, res.box.height) == (2, 2)
    assert res.box.contains(5, 5)
    assert len(res.x) == 10


def test_min_box_clamped_at_sensor_edge():
    res = roi_from_points(np.array([127]), np.array([127]), width=128, height=128)
    assert res.box == RoiBox(126, 127, 126, 127)


def test_trim_example_1_to_100():
    x = np.arange(1, 101)
    res = estimate_spatial_roi(window(x, np.full(100, 7)), 0.9)
    # 45 of the 50 columns on each side of the centroid (50.5) are kept
    assert (res.box.x_min, res.box.x_max) == (6, 95)
    assert (res.box.x_min, res.box.x_max) == trim_oracle(x.tolist(), 0.9)
    assert len(res.x) == 90


@given(points, st.floats(0.05, 1.0))
def test_trim_matches_sort_oracle(pts, frac):
    x, y = (np.array(v) for v in zip(*pts))
    res = roi_from_points(x, y, frac)
    lo, hi = trim_oracle(x.tolist(), frac)
    if hi > lo:
        assert (res.box.x_min, res.box.x_max) == (lo, hi)
    else:
        assert res.box.width == 2


def test_outlier_excluded_by_prior():
    r = np.random.default_rng(0)
    x = np.concatenate([r.integers(12, 19, 50), [50]])
    y = np.concatenate([r.integers(12, 19, 50), [50]])
    prev = RoiBox(10, 20, 10, 20)
    with_prior = roi_from_points(x, y, 1.0, prev, smooth_dist=2)
    assert with_prior.box.x_max < 20 and with_prior.box.y_max < 20
    assert 50 not in with_prior.x
    assert not with_prior.fell_back
    assert roi_from_points(x, y, 1.0).box.x_max == 50


def test_prior_rejecting_everything_falls_back():
    x, y = np.array([100, 101, 102]), np.array([100, 100, 101])
    res = roi_from_points(x, y, 1.0, RoiBox(0, 5, 0, 5), smooth_dist=2)
    assert res.fell_back
    assert res.box == roi_from_points(x, y, 1.0).box


def test_chebyshev_distance():
    box = RoiBox(10, 20, 10, 20)
    assert box.distance(np.array([15, 22, 25, 5]), np.array([15, 10, 27, 5])).tolist() == [0, 2, 7, 5]


@given(
    st.lists(st.tuples(st.integers(20, 100), st.integers(20, 100)), min_size=1, max_size=200),
    st.floats(0.05, 1.0),
    st.integers(-20, 20),
    st.integers(-20, 20),
)
def test_translation_covariance(pts, frac, dx, dy):
    x, y = (np.array(v) for v in zip(*pts))
    a = roi_from_points(x, y, frac, width=128, height=128)
    b = roi_from_points(x + dx, y + dy, frac, width=128, height=128)
    assert b.box == a.box.shifted(dx, dy)
    ia = resize_square(binarize(a.x, a.y, a.box), 60)
    ib = resize_square(binarize(b.x, b.y, b.box), 60)
    np.testing.assert_array_equal(ia, ib)


@given(st.integers(1, 90), st.integers(1, 90), st.integers(1, 64), st.integers(0, 2**32 - 1))
def test_resize_within_one_pixel_of_scaled_points(h, w, side, seed):
    img = (np.random.default_rng(seed).random((h, w)) > 0.9).astype(np.uint8)
    out = resize_square(img, side)
    assert set(np.unique(out)) <= {0, 1}
    ys, xs = np.nonzero(img)
    scaled = np.zeros((side, side), bool)
    # every source pixel's footprint in output coordinates
    for y, x in zip(ys, xs):
        scaled[y * side // h : max(y * side // h + 1, (y + 1) * side // h), x * side // w : max(x * side // w + 1, (x + 1) * side // w)] = True
    k = np.ones((3, 3))
    assert binary_dilation(scaled, k)[out.astype(bool)].all()
    assert binary_dilation(out.astype(bool), k)[scaled].all()


@given(st.integers(1, 30), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_resize_upscale_is_replication(h, w, seed):
    img = (np.random.default_rng(seed).random((h, w)) > 0.5).astype(np.uint8)
    side = max(h, w) * 2
    out = resize_square(img, side)
    np.testing.assert_array_equal(out, img[np.ix_(np.arange(side) * h // side, np.arange(side) * w // side)])


@given(points)
def test_full_fraction_gives_bounding_box(pts):
    x, y = (np.array(v) for v in zip(*pts))
    assume(len(set(x)) > 1 and len(set(y)) > 1)
    res = roi_from_points(x, y, 1.0)
    assert res.box == RoiBox(x.min(), x.max(), y.min(), y.max())


@given(points, st.floats(0.05, 1.0), st.integers(0, 100), st.integers(0, 100))
def test_infinite_smooth_dist_equals_no_prior(pts, frac, a, b):
    x, y = (np.array(v) for v in zip(*pts))
    prev = RoiBox(a, a + 5, b, b + 5)
    got = roi_from_points(x, y, frac, prev, smooth_dist=np.inf)
    ref = roi_from_points(x, y, frac)
    assert got.box == ref.box
    np.testing.assert_array_equal(got.x, ref.x)


def test_trim_fraction_validated():
    with pytest.raises(ValueError):
        roi_from_points(np.array([1]), np.array([1]), 0.0)
    with pytest.raises(ValueError):
        roi_from_points(np.array([], int), np.array([], int))


def test_binarize_same_pixel_is_idempotent():
    img = binarize(np.array([3, 3, 3]), np.array([4, 4, 4]), RoiBox(2, 5, 3, 6))
    assert img.sum() == 1 and img[1, 1] == 1


def test_binarize_empty_row():
    img = binarize(np.array([2, 5]), np.array([3, 3]), RoiBox(2, 5, 3, 6))
    assert img.shape == (4, 4)
    assert img[1:].sum() == 0


def test_resize_identity():
    img = (np.random.default_rng(1).random((60, 60)) > 0.5).astype(np.uint8)
    np.testing.assert_array_equal(resize_square(img, 60), img)


def test_resize_2x2_to_4():
    out = resize_square(np.array([[1, 0], [0, 0]], np.uint8), 4)
    expected = np.zeros((4, 4), np.uint8)
    expected[:2, :2] = 1
    np.testing.assert_array_equal(out, expected)


def test_resize_120x80_against_direct_scaling():
    # rectangle outline on an 80-row, 120-column canvas
    h, w = 80, 120
    img = np.zeros((h, w), np.uint8)
    img[10, 20:100] = img[70, 20:100] = 1
    img[10:71, 20] = img[10:71, 99] = 1
    out = resize_square(img, 60)
    assert out.shape == (60, 60) and set(np.unique(out)) <= {0, 1}
    gt = np.zeros((60, 60), bool)
    r0, r1 = round(10 * 60 / h), round(70 * 60 / h)
    c0, c1 = round(20 * 60 / w), round(99 * 60 / w)
    gt[r0, c0 : c1 + 1] = gt[r1, c0 : c1 + 1] = True
    gt[r0 : r1 + 1, c0] = gt[r0 : r1 + 1, c1] = True
    near_gt = binary_dilation(gt, np.ones((3, 3)))
    near_out = binary_dilation(out.astype(bool), np.ones((3, 3)))
    assert near_gt[out.astype(bool)].all()
    assert near_out[gt].all()


def test_resize_empty_rejected():
    with pytest.raises(ValueError):
        resize_square(np.zeros((0, 3), np.uint8), 4)


def test_to_input_vector_examples():
    assert to_input_vector(np.zeros((2, 2), np.uint8)).tolist() == [-1, -1, -1, -1]
    img = np.zeros((2, 2), np.uint8)
    img[0, 1] = 1
    assert to_input_vector(img).tolist() == [-1, 1, -1, -1]
    assert to_input_vector(np.zeros((60, 60), np.uint8)).shape == (3600,)


@given(points, st.floats(0.05, 1.0), st.integers(1, 64))
def test_vector_components_are_signs(pts, frac, side):
    x, y = (np.array(v) for v in zip(*pts))
    res = roi_from_points(x, y, frac)
    v = to_input_vector(resize_square(binarize(res.x, res.y, res.box), side))
    assert v.shape == (side * side,)
    assert set(np.unique(v)) <= {-1.0, 1.0}


def test_tracker_threads_previous_box():
    tr = RoiTracker(1.0, 2.0, 8, 128, 128)
    tr(window([10, 20, 10, 20], [10, 10, 20, 20]))
    assert tr.prev_roi == RoiBox(10, 20, 10, 20)
    img = tr(window([11, 19, 100], [11, 19, 100]))
    assert img.shape == (8, 8)
    assert tr.prev_roi.x_max == 19
    tr(window([90, 91], [90, 91]))
    assert tr.n_fallbacks == 1
