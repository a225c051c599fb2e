import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import brute_mscw, positions, streams
from ipsclass.distance import DistanceParams, SlidingMscw, classify_distance, euclidean_distance, mscw
from ipsclass.events import DeviceStream
from ipsclass.labels import MovementLabel as L

AME, UAE, BURNIN = int(L.AME), int(L.UAE), int(L.BURNIN)


@pytest.mark.parametrize(
    "a, b, expected",
    [((0, 0, 0), (3, 4, 0), 5.0), ((1, 2, 3), (1, 2, 3), 0.0), ((1, 1, 1), (2, 2, 2), math.sqrt(3))],
)
def test_euclidean_distance(a, b, expected):
    assert euclidean_distance(a, b) == pytest.approx(expected, abs=1e-15)
    assert euclidean_distance(b, a) == euclidean_distance(a, b)


def test_mscw_hand_example():
    assert mscw(np.array([(0, 0, 0), (1, 0, 0), (3, 0, 0)], float), 2).tolist() == [3.0]


def test_mscw_single_point():
    pos = np.tile([4.0, -2.0, 1.0], (30, 1))
    for k in (1, 3, 10):
        assert np.all(mscw(pos, k) == 0.0)


def test_mscw_short_stream_is_empty():
    assert mscw(np.zeros((5, 3)), 5).size == 0
    assert mscw(np.zeros((0, 3)), 1).size == 0


@pytest.mark.parametrize("k", [1, 5, 10, 50])
def test_mscw_matches_brute_force(rng, k):
    pos = rng.uniform(0, 10, size=(1000, 3))
    np.testing.assert_allclose(mscw(pos, k), brute_mscw(pos.tolist(), k), rtol=0, atol=1e-12)


@given(positions(max_n=40), st.integers(1, 12))
def test_sliding_window_is_bit_identical(pos, k):
    w = SlidingMscw(k)
    out = [w.push(p) for p in pos]
    assert out[: min(k, len(pos))] == [None] * min(k, len(pos))
    assert [v for v in out if v is not None] == mscw(pos, k).tolist()


def test_sliding_window_reset():
    w = SlidingMscw(1)
    w.push((0, 0, 0))
    assert w.push((2, 0, 0)) == 2.0
    w.reset()
    assert w.push((5, 0, 0)) is None


def test_straight_line_is_all_ame():
    # 1 m/s sampled at 1 Hz: the 10th predecessor is 10 m back
    pos = np.column_stack([np.arange(60.0), np.zeros(60), np.zeros(60)])
    values = mscw(pos, 10)
    oracle = brute_mscw(pos.tolist(), 10)
    assert values.tolist() == oracle == [10.0] * 50
    labels = classify_distance(pos, DistanceParams(10, 1.5))
    assert labels[:10].tolist() == [BURNIN] * 10
    assert np.all(labels[10:] == AME)


def test_bounded_jitter_is_all_uae(rng):
    pos = np.array([20.0, 30.0, 1.0]) + rng.uniform(-0.2, 0.2, size=(500, 3))
    bound = 2 * math.sqrt(3) * 0.2
    assert max(brute_mscw(pos.tolist(), 10)) <= bound < 1.5
    labels = classify_distance(pos, DistanceParams(10, 1.5))
    assert np.all(labels[10:] == UAE)


def test_boundary_is_strict():
    pos = np.array([(0, 0, 0), (1.5, 0, 0)], float)
    assert mscw(pos, 1).tolist() == [1.5]
    assert classify_distance(pos, DistanceParams(1, 1.5)).tolist() == [BURNIN, UAE]
    assert classify_distance(pos, DistanceParams(1, 1.4999)).tolist() == [BURNIN, AME]


def test_reference_parameterization():
    # largest distance to one of 10 predecessors above 1.5 m means AME
    params = DistanceParams()
    assert (params.k, params.r) == (10, 1.5)
    pos = np.zeros((11, 3))
    pos[10] = (0, 1.51, 0)
    assert classify_distance(pos, params)[10] == AME
    pos[10] = (0, 1.5, 0)
    assert classify_distance(pos, params)[10] == UAE


@pytest.mark.parametrize("k, r", [(0, 1.0), (2.5, 1.0), (1, -0.1), (1, float("inf")), (True, 1.0)])
def test_invalid_params(k, r):
    with pytest.raises(ValueError):
        DistanceParams(k, r)


@given(streams(), st.integers(1, 8))
def test_burnin_prefix_and_length(stream, k):
    labels = classify_distance(stream, DistanceParams(k, 1.0))
    assert len(labels) == stream.n
    assert np.all(labels[: min(k, stream.n)] == BURNIN)
    assert np.all(labels[k:] != BURNIN)
    assert len(mscw(stream, k)) == max(stream.n - k, 0)


@given(positions(min_n=2), st.integers(1, 6), st.lists(st.floats(0, 100), min_size=2, max_size=6))
def test_ame_set_shrinks_with_radius(pos, k, radii):
    radii = sorted(radii)
    sets = [classify_distance(pos, DistanceParams(k, r)) == AME for r in radii]
    for wider, narrower in zip(sets, sets[1:]):
        assert not np.any(narrower & ~wider)


@given(positions(min_n=2), st.integers(1, 6))
def test_window_monotonicity(pos, k):
    small, large = mscw(pos, k), mscw(pos, k + 1)
    assert np.all(large >= small[1:])


@given(
    positions(min_n=2),
    st.integers(1, 6),
    st.floats(0, 2 * math.pi),
    st.tuples(*[st.floats(-1000, 1000)] * 3),
)
def test_rigid_motion_invariance(pos, k, angle, shift):
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    moved = pos @ rot.T + np.array(shift)
    np.testing.assert_allclose(mscw(moved, k), mscw(pos, k), atol=1e-9)


@given(streams(min_n=1), st.integers(1, 6), st.lists(st.floats(0, 1e6), min_size=60, max_size=60))
def test_timestamps_do_not_matter(stream, k, new_t):
    other = DeviceStream("dev", stream.pos, sorted(new_t[: stream.n]))
    params = DistanceParams(k, 2.0)
    assert np.array_equal(classify_distance(stream, params), classify_distance(other, params))


@given(streams(min_n=1), st.integers(1, 6))
def test_labels_agree_with_brute_force(stream, k):
    r = 20.0
    expected = [BURNIN] * min(k, stream.n) + [AME if v > r else UAE for v in brute_mscw(stream.pos.tolist(), k)]
    got = classify_distance(stream, DistanceParams(k, r)).tolist()
    # allow a flip only where the two distance evaluations straddle r
    oracle = brute_mscw(stream.pos.tolist(), k)
    for i, (g, e) in enumerate(zip(got, expected)):
        if g != e:
            assert abs(oracle[i - k] - r) < 1e-9
