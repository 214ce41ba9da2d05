import numpy as np
import pytest

from carnot.dimension import BoxCountingDimension, box_dimension, greedy_cover, low_degree_set
from carnot.examples import builtin_submanifold
from carnot.group import builtin_group, euclidean
from carnot.metric import HomogeneousDistance

PI = builtin_group("pi")
COARSE = [2.0**-j for j in range(2, 6)]


def test_single_point_is_degenerate():
    rep = box_dimension(np.zeros((5, 3)), d=HomogeneousDistance(builtin_group("h1")))
    assert rep.dim_estimate == 0.0 and "degenerate" in rep.note


def test_too_few_points():
    with pytest.raises(ValueError):
        box_dimension(np.random.default_rng(0).normal(size=(50, 2)), d=HomogeneousDistance(PI))


def test_horizontal_segment_is_one_dimensional():
    X = np.c_[np.linspace(0, 1, 5000), np.zeros(5000)]
    rep = box_dimension(X, d=HomogeneousDistance(PI))
    assert rep.counts == [8, 16, 32, 64]
    assert rep.dim_estimate == pytest.approx(1.0)


def test_greedy_cover_matches_brute_force(rng):
    d = HomogeneousDistance(builtin_group("h1"))
    X = rng.uniform(-1, 1, size=(400, 3))
    s = 0.3
    covered = np.zeros(len(X), dtype=bool)
    centres = 0
    for i in range(len(X)):
        if not covered[i]:
            centres += 1
            covered |= d.distance(X[i], X) < s
    assert greedy_cover(X, s, d) == centres


def test_euclidean_square():
    X = np.random.default_rng(0).uniform(0, 1, size=(50_000, 2))
    rep = box_dimension(X, COARSE, HomogeneousDistance(euclidean(2)))
    assert rep.dim_estimate == pytest.approx(2.0, abs=0.2)


def test_pi_group_is_three_dimensional():
    X = np.random.default_rng(0).uniform(0, 1, size=(100_000, 2))
    X[:, 1] *= 0.0625
    rep = box_dimension(X, COARSE, HomogeneousDistance(PI))
    assert 2.5 <= rep.dim_estimate <= 3.2
    assert rep.counts == sorted(rep.counts)


def test_estimator_wrapper_and_threads():
    X = np.random.default_rng(1).uniform(0, 1, size=(20_000, 2))
    est = BoxCountingDimension(distance=HomogeneousDistance(euclidean(2)), scales=COARSE)
    est.fit(X)
    par = BoxCountingDimension(distance=HomogeneousDistance(euclidean(2)), scales=COARSE, threads=3).fit(X)
    assert est.score() == par.dimension_
    assert list(est.counts_) == par.report_.counts
    assert est.get_params()["threads"] == 1


def test_undersampled_note():
    X = np.random.default_rng(2).uniform(0, 1, size=(1500, 2))
    rep = box_dimension(X, [2.0**-j for j in range(4, 8)], HomogeneousDistance(euclidean(2)))
    assert "undersampled" in rep.note


def _plane_grid(zfun):
    g = np.linspace(-1, 1, 21)
    return np.array([[a, b, zfun(a, b)] for a in g for b in g])


def test_low_degree_set_plane():
    low = low_degree_set(builtin_submanifold("h1_plane"), 2, _plane_grid(lambda a, b: 0.0))
    np.testing.assert_allclose(low.points, [[0, 0, 0]], atol=1e-15)
    assert not low.beyond_bound and low.sample_size == 441


def test_low_degree_set_paraboloid_is_origin():
    low = low_degree_set(builtin_submanifold("h1_paraboloid"), 2, _plane_grid(lambda a, b: a * a + b * b))
    assert len(low) == 1
    np.testing.assert_allclose(low.points[0], 0, atol=1e-15)


def test_low_degree_set_full_and_beyond_bound():
    plane = builtin_submanifold("h1_plane")
    low = low_degree_set(plane, 3, _plane_grid(lambda a, b: 0.0))
    assert len(low) == low.sample_size
    # Q - k = 4 - 1 = 3 for a surface in H^1
    assert not low.beyond_bound
    assert low_degree_set(plane, 3.5, _plane_grid(lambda a, b: 0.0)).beyond_bound
