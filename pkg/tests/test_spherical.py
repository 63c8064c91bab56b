"""Unit-sphere k-means hashing and the online competitive-learning variant."""

import numpy as np
import pytest

from flyhash.hashers import BioHasher, SphericalHasher, train_biohash, train_spherical
from flyhash.hashers.base import TrainConfig, unit_rows_skip_zeros
from flyhash.hashers.spherical import biohash_objective, spherical_objective


def two_cluster_data(seed=0, n_per=40, spread=0.05):
    """Points near +e1 and -e1 on the unit circle in R^3."""
    rng = np.random.default_rng(seed)
    a = np.array([1.0, 0.0, 0.0]) + spread * rng.normal(size=(n_per, 3))
    b = np.array([-1.0, 0.0, 0.0]) + spread * rng.normal(size=(n_per, 3))
    return np.vstack([a, b])


def test_objective_hand_value():
    W = np.array([[1.0, 0.0], [0.0, 1.0]])
    X = np.array([[0.6, 0.8], [1.0, 0.0]])
    # best dots: 0.8 and 1.0
    assert spherical_objective(W, X) == pytest.approx(1.8)


def test_single_point_single_centroid_converges_to_it():
    x = np.array([[3.0, 4.0]])
    m = train_spherical(x, 1, TrainConfig(epochs=3, seed=0))
    assert np.allclose(m.W[0], [0.6, 0.8], atol=1e-12)


def test_two_antipodal_clusters_recovered():
    X = two_cluster_data()
    m = train_spherical(X, 2, TrainConfig(epochs=20, seed=1))
    # each cluster mean direction is close to +-e1; centroids should align
    dots = m.W @ np.array([1.0, 0.0, 0.0])
    assert np.isclose(max(dots), 1.0, atol=5e-3)
    assert np.isclose(min(dots), -1.0, atol=5e-3)


def test_objective_non_decreasing(rng):
    X = rng.normal(size=(150, 8))
    Xn, _ = unit_rows_skip_zeros(X, "test")
    trace = []
    train_spherical(X, 12, TrainConfig(epochs=25, seed=3),
                    on_epoch=lambda e, W: trace.append(spherical_objective(W, Xn)))
    assert np.all(np.diff(trace) >= -1e-9)


def test_dead_centroids_zero_out_and_stay_out(rng):
    # 2 tight clusters, 16 centroids: most get no winners and zero out
    X = two_cluster_data(seed=5)
    m = train_spherical(X, 16, TrainConfig(epochs=10, seed=2))
    norms = np.linalg.norm(m.W, axis=1)
    assert np.all((norms < 1e-12) | (np.abs(norms - 1.0) < 1e-12))
    assert (norms < 1e-12).sum() >= 1


def test_skips_zero_rows_with_warning(rng):
    X = rng.normal(size=(30, 4))
    X[7] = 0.0
    with pytest.warns(UserWarning):
        train_spherical(X, 4, TrainConfig(epochs=2, seed=0))


def test_all_zero_rows_rejected():
    with pytest.warns(UserWarning), pytest.raises(ValueError):
        train_spherical(np.zeros((5, 3)), 2, TrainConfig(epochs=1, seed=0))


def test_biohash_rows_stay_near_unit_norm(rng):
    X = rng.normal(size=(200, 10))
    m = train_biohash(X, 16, epochs=30, seed=1)
    norms = np.linalg.norm(m.W, axis=1)
    assert np.all(np.abs(norms - 1.0) < 0.05)


def test_biohash_converges_to_data_direction():
    # w += lr (x - (w.x) w) has x as its attracting fixed point: the
    # alignment c = w.x obeys dc = lr (1 - c^2) and climbs toward 1
    x = np.array([[1.0, 0.0]])
    m = train_biohash(x, 1, epochs=600, seed=0)
    assert m.W[0, 0] > 0.99
    assert abs(m.W[0, 1]) < 0.1


def test_biohash_objective_matches_manual_sum():
    W = np.array([[0.6, 0.8], [1.0, 0.0]])
    X = np.array([[1.0, 0.0], [0.0, 1.0]])
    # winners by raw dot: row 1 (dot 1.0), row 0 (dot 0.8); both unit rows
    assert biohash_objective(W, X) == pytest.approx(1.8)


def test_biohash_objective_divides_by_row_norm():
    W = np.array([[3.0, 0.0]])
    X = np.array([[2.0, 0.0]])
    # raw dot 6, norm 3 -> normalized contribution 2
    assert biohash_objective(W, X) == pytest.approx(2.0)


def test_biohash_objective_equals_spherical_on_unit_rows(rng):
    X = rng.normal(size=(40, 6))
    Xn, _ = unit_rows_skip_zeros(X, "test")
    W = rng.normal(size=(8, 6))
    Wn = W / np.linalg.norm(W, axis=1, keepdims=True)
    assert np.isclose(biohash_objective(Wn, Xn), spherical_objective(Wn, Xn))


def test_biohash_objective_rejects_zero_rows():
    W = np.array([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        biohash_objective(W, np.array([[1.0, 0.0]]))


def test_batch_beats_online_on_clustered_data():
    X = two_cluster_data(seed=11, n_per=100, spread=0.3)
    Xn, _ = unit_rows_skip_zeros(X, "test")
    wins = 0
    for seed in range(5):
        m_b = train_spherical(X, 8, TrainConfig(epochs=40, seed=seed))
        m_o = train_biohash(X, 8, epochs=40, seed=seed)
        wins += biohash_objective(m_o.W, Xn) <= spherical_objective(m_b.W, Xn) + 1e-9
    assert wins >= 4


def test_estimators_produce_sparse_codes(rng):
    X = rng.normal(size=(80, 10))
    for cls in (SphericalHasher, BioHasher):
        h = cls(n_bits=16, alpha=1, random_state=0)
        codes = h.fit(X).transform(X)
        assert codes.shape == (80, 1)
        assert codes.dtype == np.uint32
        assert len(h.objective_trace_) > 0
