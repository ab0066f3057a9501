import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kdpp_al.representativeness import (
    kappa_schedule,
    kcenter_greedy,
    pairwise_distances,
    rep_vectors,
)


def brute_force_radius(dist, kappa):
    n = dist.shape[0]
    return min(dist[:, list(c)].min(axis=1).max() for c in itertools.combinations(range(n), kappa))


def test_distance_examples():
    d = pairwise_distances(np.array([[0.0, 0.0], [3.0, 4.0], [0.0, 0.0]]))
    assert d[0, 1] == 5.0 and d[1, 0] == 5.0
    assert d[0, 2] == 0.0
    assert np.all(np.diag(d) == 0.0)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (7, 3), elements=st.floats(-1e3, 1e3)))
def test_distance_symmetric_metric(x):
    d = pairwise_distances(x)
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0.0)
    assert np.all(d >= 0)
    # oracle: direct norms
    want = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2)
    np.testing.assert_allclose(d, want, rtol=1e-9, atol=1e-9)


def test_line_farthest_point():
    x = np.arange(11.0)[:, None]
    d = pairwise_distances(x)
    res = kcenter_greedy(d, [5], [i for i in range(11) if i != 5], 1)
    assert res.centers.tolist() == [0]
    # 10 is now the farthest point from {0, 5}
    assert res.radius == 5.0


def test_saturation():
    rng = np.random.default_rng(0)
    d = pairwise_distances(rng.standard_normal((9, 2)))
    cand = [1, 3, 4, 7, 8]
    res = kcenter_greedy(d, [0, 2], cand, len(cand))
    assert sorted(res.centers.tolist()) == cand
    assert res.radius == 0.0


def test_radius_definition():
    rng = np.random.default_rng(1)
    d = pairwise_distances(rng.standard_normal((20, 3)))
    given_c = [0, 1, 2]
    cand = list(range(3, 20))
    res = kcenter_greedy(d, given_c, cand, 4)
    centers = given_c + res.centers.tolist()
    assert len(set(res.centers.tolist())) == 4 and set(res.centers.tolist()) <= set(cand)
    assert res.radius == pytest.approx(d[np.ix_(cand, centers)].min(axis=1).max())


@pytest.mark.parametrize("seed", range(15))
def test_two_approximation(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 13))
    kappa = int(rng.integers(1, 4))
    d = pairwise_distances(rng.standard_normal((n, 2)))
    res = kcenter_greedy(d, [], np.arange(n), kappa)
    assert res.radius <= 2.0 * brute_force_radius(d, kappa) + 1e-12


def test_errors():
    d = pairwise_distances(np.arange(4.0)[:, None])
    with pytest.raises(ValueError):
        kcenter_greedy(d, [0], [1, 2], 3)
    with pytest.raises(ValueError):
        kcenter_greedy(d, [0], [], 0)
    with pytest.raises(ValueError):
        kcenter_greedy(d, [0, 1], [1, 2], 1)


def test_kappa_schedule():
    assert kappa_schedule(200) == 10
    assert kappa_schedule(1) == 1
    assert kappa_schedule(2) == 1
    assert kappa_schedule(340) == 13
    with pytest.raises(ValueError):
        kappa_schedule(0)


def test_rep_vector_examples():
    c = np.array([[1.0, 2.0], [-2.0, 1.0]])
    x = np.array([[1.0, 2.0], [2.0, -1.0], [-1.0, -2.0]])
    r = rep_vectors(x, c)
    assert r[0, 0] == pytest.approx(1.0)
    assert r[1, 0] == pytest.approx(0.0, abs=1e-15)
    assert r[2, 0] == pytest.approx(-1.0)


def test_rep_vectors_zero_row_guard():
    r = rep_vectors(np.zeros((2, 3)), np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    assert np.all(np.isfinite(r))
    assert np.all(np.abs(r) <= 1.0)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (5, 3), elements=st.floats(-100, 100)),
       arrays(np.float64, (2, 3), elements=st.floats(-100, 100)))
def test_rep_vectors_bounded(x, c):
    r = rep_vectors(x, c)
    assert r.shape == (5, 2)
    assert np.all(r <= 1.0) and np.all(r >= -1.0)
