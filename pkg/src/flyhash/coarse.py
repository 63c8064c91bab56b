"""Coarse quantization: partition the database with k-means and search
only the cells nearest the query.

The cell count is ceil(n/1000), so datasets up to a thousand points form
a single cell and probing is a no-op. Probing all cells reproduces
unquantized search exactly, giving a sanity anchor for the recall/speed
trade-off.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_matrix, check_positive_int, check_random_state, check_vector

_KMEANS_ITERS = 25


@dataclass(frozen=True)
class CoarseQuantizer:
    """Fitted k-means partition of a database.

    Attributes
    ----------
    centroids : (C, d) array
    assignments : (n,) int array
        Centroid index of every database item, aligned with ids.
    ids : (n,) int64 array
        Database ids in storage order.
    """

    centroids: np.ndarray
    assignments: np.ndarray
    ids: np.ndarray

    @property
    def n_cells(self):
        return self.centroids.shape[0]


def _kmeans_pp_seed(X, C, rng):
    """Distance-weighted seeding: each new centroid is drawn with
    probability proportional to squared distance from the chosen set."""
    n = X.shape[0]
    centroids = np.empty((C, X.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = X[first]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, C):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            pick = int(rng.choice(n, p=probs))
        else:
            pick = int(rng.integers(n))
        centroids[j] = X[pick]
        d2 = np.minimum(d2, ((X - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _assign(X, centroids):
    """Nearest centroid per row (squared Euclidean, ties to the lowest
    centroid index)."""
    x2 = (X * X).sum(axis=1)[:, None]
    c2 = (centroids * centroids).sum(axis=1)[None, :]
    d2 = x2 + c2 - 2.0 * (X @ centroids.T)
    return d2.argmin(axis=1)


def coarse_fit(X, seed=None, ids=None):
    """Cluster the database into ceil(n/1000) cells.

    Runs k-means with distance-weighted seeding and a fixed 25 Lloyd
    iterations; a cell that loses all members keeps its previous
    centroid. Deterministic per seed.
    """
    X = check_matrix(X, "X")
    n = X.shape[0]
    if ids is None:
        ids = np.arange(n, dtype=np.int64)
    else:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.shape != (n,):
            raise ValueError(f"ids must have shape ({n},), got {ids.shape}")
    rng = check_random_state(seed)
    C = math.ceil(n / 1000)
    centroids = _kmeans_pp_seed(X, C, rng)
    assign = _assign(X, centroids)
    for _ in range(_KMEANS_ITERS):
        for j in range(C):
            members = assign == j
            if members.any():
                centroids[j] = X[members].mean(axis=0)
        new_assign = _assign(X, centroids)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return CoarseQuantizer(
        centroids=centroids, assignments=assign.astype(np.int64), ids=ids
    )


def coarse_probe(cq, x_q, nprobe=20):
    """Ids in the nprobe cells whose centroids are nearest the query.

    nprobe larger than the cell count is clamped, so nprobe = C returns
    every id. Ties between equidistant centroids break toward the lower
    centroid index; returned ids are sorted ascending.
    """
    nprobe = check_positive_int(nprobe, "nprobe")
    x_q = check_vector(x_q, "x_q")
    nprobe = min(nprobe, cq.n_cells)
    d2 = ((cq.centroids - x_q) ** 2).sum(axis=1)
    chosen = np.lexsort((np.arange(cq.n_cells), d2))[:nprobe]
    mask = np.isin(cq.assignments, chosen)
    return np.sort(cq.ids[mask])
