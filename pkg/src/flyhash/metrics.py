"""Retrieval ground truth and quality metrics.

Relevance comes from one of two oracles: label mode (a target is
relevant to a query iff they share a class label) or metric mode (the
query's exact top-k neighbors under Euclidean or cosine distance are the
relevant set). Queries with no relevant target have undefined average
precision; they are excluded from means and surfaced as a count.
"""

import warnings

import numpy as np

from ._validation import check_matrix, check_positive_int


class RelevanceOracle:
    """Per-query relevance judgments against a fixed target set.

    Build through build_label_oracle or build_metric_oracle.
    """

    def __init__(self, mode, target_ids, data):
        self.mode = mode
        self._target_ids = np.asarray(target_ids, dtype=np.int64)
        order = np.argsort(self._target_ids, kind="stable")
        self._sorted_ids = self._target_ids[order]
        if mode == "label":
            target_labels, query_labels = data
            self._sorted_labels = np.asarray(target_labels)[order]
            self._query_labels = np.asarray(query_labels)
            labels, counts = np.unique(np.asarray(target_labels), return_counts=True)
            per_label = dict(zip(labels.tolist(), counts.tolist()))
            self._counts = np.array(
                [per_label.get(q, 0) for q in self._query_labels.tolist()],
                dtype=np.int64,
            )
        elif mode == "metric":
            self._relevant_sets = [np.sort(ids) for ids in data]
            self._counts = np.array([s.size for s in self._relevant_sets])
        else:
            raise ValueError(f"unknown oracle mode {mode!r}")

    @property
    def n_queries(self):
        return self._counts.shape[0]

    def relevant_count(self, q):
        """Number of relevant targets for query q."""
        return int(self._counts[q])

    @property
    def zero_relevant_queries(self):
        """How many queries have no relevant target at all."""
        return int((self._counts == 0).sum())

    def relevance_mask(self, q, ids):
        """Boolean mask: which of the given target ids are relevant to
        query q."""
        ids = np.asarray(ids, dtype=np.int64)
        if self.mode == "label":
            loc = np.searchsorted(self._sorted_ids, ids)
            loc = np.minimum(loc, self._sorted_ids.size - 1)
            if not np.array_equal(self._sorted_ids[loc], ids):
                raise KeyError("ranking contains ids that are not targets")
            return self._sorted_labels[loc] == self._query_labels[q]
        rel = self._relevant_sets[q]
        pos = np.searchsorted(rel, ids)
        pos = np.minimum(pos, max(rel.size - 1, 0))
        if rel.size == 0:
            return np.zeros(ids.shape, dtype=bool)
        return rel[pos] == ids


def build_label_oracle(target_labels, query_labels, target_ids=None):
    """Relevance by shared class label.

    Every target and every query must carry exactly one label; missing
    (NaN or None) labels are rejected.
    """
    target_labels = np.asarray(target_labels)
    query_labels = np.asarray(query_labels)
    for name, arr in (("target_labels", target_labels), ("query_labels", query_labels)):
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError(f"{name} must be a non-empty 1-d array")
        if arr.dtype == object and any(v is None for v in arr):
            raise ValueError(f"{name} contains missing labels")
        if np.issubdtype(arr.dtype, np.floating) and np.isnan(arr).any():
            raise ValueError(f"{name} contains missing labels")
    if target_ids is None:
        target_ids = np.arange(target_labels.size, dtype=np.int64)
    if len(target_ids) != len(target_labels):
        raise ValueError("target_ids and target_labels lengths differ")
    return RelevanceOracle("label", target_ids, (target_labels, query_labels))


def build_metric_oracle(targets, queries, k, metric="euclidean", target_ids=None):
    """Relevance = membership in the query's exact top-k neighbor set."""
    targets = check_matrix(targets, "targets")
    if target_ids is None:
        target_ids = np.arange(targets.shape[0], dtype=np.int64)
    neighbor_ids = brute_force_neighbors(
        targets, queries, k, metric=metric, target_ids=target_ids
    )
    return RelevanceOracle("metric", target_ids, list(neighbor_ids))


def _ap_at_n(rel, n, total_relevant):
    """Average precision truncated at n for one query's relevance bits."""
    rel = rel[:n]
    if total_relevant == 0:
        return None
    hits = np.cumsum(rel)
    ranks = np.arange(1, rel.size + 1)
    precisions = hits[rel] / ranks[rel]
    return precisions.sum() / min(n, total_relevant)


def map_at_n(rankings, oracle, n):
    """Mean average precision at cutoff n, in percent.

    Per query, AP@n sums precision at every relevant retrieved rank
    r <= n and divides by min(n, R_q) where R_q is the query's relevant
    count; the mean over queries (zero-relevant queries excluded) is
    scaled to [0, 100].
    """
    n = check_positive_int(n, "n")
    total = 0.0
    counted = 0
    for q, ranking in enumerate(rankings):
        ap = _ap_at_n(
            oracle.relevance_mask(q, np.asarray(ranking)[:n]),
            n,
            oracle.relevant_count(q),
        )
        if ap is None:
            continue
        total += ap
        counted += 1
    if counted == 0:
        raise ValueError("every query has zero relevant targets")
    return 100.0 * total / counted


def precision_at_n(rankings, oracle, n):
    """Mean fraction of relevant items in the top n, in percent.

    Zero-relevant queries are excluded, matching map_at_n, so the two
    metrics agree at n = 1.
    """
    n = check_positive_int(n, "n")
    total = 0.0
    counted = 0
    for q, ranking in enumerate(rankings):
        if oracle.relevant_count(q) == 0:
            continue
        rel = oracle.relevance_mask(q, np.asarray(ranking)[:n])
        total += rel.sum() / n
        counted += 1
    if counted == 0:
        raise ValueError("every query has zero relevant targets")
    return 100.0 * total / counted


def brute_force_neighbors(targets, queries, k, metric="euclidean", target_ids=None):
    """Exact k nearest targets per query, ties broken by ascending id.

    metric is "euclidean" or "cosine" (cosine distance of zero-norm
    vectors is taken as 1, i.e. maximally distant but finite).
    """
    targets = check_matrix(targets, "targets")
    queries = check_matrix(queries, "queries")
    k = check_positive_int(k, "k")
    n = targets.shape[0]
    if target_ids is None:
        target_ids = np.arange(n, dtype=np.int64)
    else:
        target_ids = np.asarray(target_ids, dtype=np.int64)
    if k > n:
        warnings.warn(
            f"k ({k}) exceeds the target count ({n}); clamping", UserWarning
        )
        k = n
    if metric == "euclidean":
        t2 = (targets * targets).sum(axis=1)
        q2 = (queries * queries).sum(axis=1)
        dists = q2[:, None] + t2[None, :] - 2.0 * (queries @ targets.T)
        np.clip(dists, 0.0, None, out=dists)
    elif metric == "cosine":
        tn = np.linalg.norm(targets, axis=1)
        qn = np.linalg.norm(queries, axis=1)
        tn[tn == 0] = 1.0
        qn[qn == 0] = 1.0
        dists = 1.0 - (queries / qn[:, None]) @ (targets / tn[:, None]).T
    else:
        raise ValueError(f"metric must be 'euclidean' or 'cosine', got {metric!r}")
    # Rank by (distance, id): sort ids into ascending order first, then a
    # stable argsort on distance preserves id order among ties.
    id_order = np.argsort(target_ids, kind="stable")
    dists = dists[:, id_order]
    ranked = np.argsort(dists, axis=1, kind="stable")[:, :k]
    return target_ids[id_order][ranked]
