"""Retrieval metrics against hand computations and a second implementation."""

import numpy as np
import pytest

from flyhash.metrics import (
    brute_force_neighbors,
    build_label_oracle,
    build_metric_oracle,
    map_at_n,
    precision_at_n,
)


def reference_map(rankings, relevant_sets, totals, n):
    """Straight-from-the-definition MAP@n, written without vectorization."""
    aps = []
    for ranking, rel_set, total in zip(rankings, relevant_sets, totals):
        if total == 0:
            continue
        hits = 0
        ap = 0.0
        for rank, item in enumerate(ranking[:n], start=1):
            if item in rel_set:
                hits += 1
                ap += hits / rank
        aps.append(ap / min(n, total))
    return 100.0 * sum(aps) / len(aps)


def test_perfect_ranking_scores_100():
    oracle = build_label_oracle(np.array([0, 0, 1, 1]), np.array([0]))
    assert map_at_n([[0, 1, 2, 3]], oracle, 2) == pytest.approx(100.0)
    assert precision_at_n([[0, 1, 2, 3]], oracle, 2) == pytest.approx(100.0)


def test_single_hit_at_rank_two():
    oracle = build_label_oracle(np.array([1, 0]), np.array([0]))
    # one relevant target, found at rank 2: AP@2 = (1/2) / 1
    assert map_at_n([[0, 1]], oracle, 2) == pytest.approx(50.0)
    assert precision_at_n([[0, 1]], oracle, 2) == pytest.approx(50.0)


def test_hand_worked_three_queries():
    target_labels = np.array([0, 0, 1, 1, 2])
    query_labels = np.array([0, 1, 2])
    oracle = build_label_oracle(target_labels, query_labels)
    rankings = [[0, 2, 1], [2, 0, 3], [4, 0, 1]]
    # q0: hits at 1,3 of R=2 -> (1/1 + 2/3)/2 = 5/6
    # q1: hits at 1,3 of R=2 -> 5/6
    # q2: hit at 1 of R=1 -> 1
    want = 100.0 * (5 / 6 + 5 / 6 + 1.0) / 3
    assert map_at_n(rankings, oracle, 3) == pytest.approx(want)
    # precision: 2/3, 2/3, 1/3
    assert precision_at_n(rankings, oracle, 3) == pytest.approx(100.0 * (2 / 3 + 2 / 3 + 1 / 3) / 3)


def test_matches_reference_implementation(rng):
    n_targets, n_queries = 60, 25
    target_labels = rng.integers(0, 4, size=n_targets)
    query_labels = rng.integers(0, 4, size=n_queries)
    oracle = build_label_oracle(target_labels, query_labels)
    rankings = [rng.permutation(n_targets)[:15] for _ in range(n_queries)]

    relevant_sets = [set(np.flatnonzero(target_labels == q)) for q in query_labels]
    totals = [len(s) for s in relevant_sets]
    for n in (1, 5, 15):
        assert map_at_n(rankings, oracle, n) == pytest.approx(
            reference_map(rankings, relevant_sets, totals, n))


def test_map_at_1_equals_precision_at_1(rng):
    target_labels = rng.integers(0, 3, size=40)
    query_labels = rng.integers(0, 5, size=20)  # some labels unseen -> R=0
    oracle = build_label_oracle(target_labels, query_labels)
    rankings = [rng.permutation(40)[:10] for _ in range(20)]
    assert map_at_n(rankings, oracle, 1) == pytest.approx(
        precision_at_n(rankings, oracle, 1))


def test_zero_relevant_queries_excluded():
    oracle = build_label_oracle(np.array([0, 0]), np.array([0, 7]))
    assert oracle.zero_relevant_queries == 1
    # query 1 has no relevant targets anywhere; only query 0 counts
    assert map_at_n([[0, 1], [0, 1]], oracle, 2) == pytest.approx(100.0)


def test_all_queries_zero_relevant_raises():
    oracle = build_label_oracle(np.array([0]), np.array([5, 6]))
    with pytest.raises(ValueError):
        map_at_n([[0], [0]], oracle, 1)
    with pytest.raises(ValueError):
        precision_at_n([[0], [0]], oracle, 1)


def test_truncation_uses_min_n_total():
    # R=3 relevant but n=2: denominator is min(2, 3) = 2
    oracle = build_label_oracle(np.array([0, 0, 0, 1]), np.array([0]))
    assert map_at_n([[0, 1, 2, 3]], oracle, 2) == pytest.approx(100.0)


def test_label_oracle_rejects_missing_labels():
    with pytest.raises(ValueError):
        build_label_oracle(np.array([0.0, np.nan]), np.array([0.0]))


def test_metric_oracle_marks_true_neighbors(rng):
    targets = rng.normal(size=(30, 4))
    queries = targets[:5] + 1e-9
    oracle = build_metric_oracle(targets, queries, k=3)
    for q in range(5):
        assert oracle.relevant_count(q) == 3
        mask = oracle.relevance_mask(q, np.array([q, (q + 1) % 30]))
        assert bool(mask[0]) is True


def test_brute_force_euclidean_hand_example():
    targets = np.array([[0.0], [2.0], [5.0]])
    queries = np.array([[1.9]])
    ids = brute_force_neighbors(targets, queries, k=2)
    assert list(ids[0]) == [1, 0]


def test_brute_force_ties_break_by_id():
    targets = np.array([[1.0], [1.0], [-1.0], [1.0]])
    queries = np.array([[0.0]])
    ids = brute_force_neighbors(targets, queries, k=4)
    assert list(ids[0]) == [0, 1, 2, 3]


def test_brute_force_cosine_ignores_magnitude():
    targets = np.array([[10.0, 0.0], [0.0, 0.1], [-1.0, 0.0]])
    queries = np.array([[1.0, 0.0]])
    ids = brute_force_neighbors(targets, queries, k=3, metric="cosine")
    assert list(ids[0]) == [0, 1, 2]


def test_brute_force_respects_custom_ids(rng):
    targets = rng.normal(size=(10, 3))
    queries = rng.normal(size=(2, 3))
    base_ids = brute_force_neighbors(targets, queries, k=4)
    custom = np.arange(100, 110)
    ids = brute_force_neighbors(targets, queries, k=4, target_ids=custom)
    assert np.array_equal(ids, base_ids + 100)


def test_brute_force_clamps_k_with_warning(rng):
    targets = rng.normal(size=(3, 2))
    with pytest.warns(UserWarning):
        ids = brute_force_neighbors(targets, rng.normal(size=(1, 2)), k=10)
    assert ids.shape == (1, 3)


def test_metric_oracle_query_permutation_invariance(rng):
    # shuffling target ids must not change which items are relevant
    targets = rng.normal(size=(20, 3))
    queries = rng.normal(size=(4, 3))
    perm = rng.permutation(20)
    o1 = build_metric_oracle(targets, queries, k=5)
    o2 = build_metric_oracle(targets[perm], queries, k=5,
                             target_ids=perm)
    for q in range(4):
        ids = np.arange(20)
        assert np.array_equal(o1.relevance_mask(q, ids), o2.relevance_mask(q, ids))
