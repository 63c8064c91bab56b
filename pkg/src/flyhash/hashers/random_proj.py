"""Untrained projection schemes: sparse Bernoulli (the fly-circuit
baseline), dense Gaussian sign hashing, and the Gaussian-orthogonal
initializer shared with the Procrustean trainer. Also the Gram-matrix
statistics used to quantify how close a random binary projection is to
orthogonal.
"""

import numpy as np

from .._validation import (
    check_alpha,
    check_matrix,
    check_positive_int,
    check_random_state,
)
from ..linalg import orthogonalize
from ..model import HashModel
from .base import BaseHasher, SparseHasherMixin


def fruitfly_init(d, D, p=0.2, seed=None, alpha=1):
    """Random sparse binary projection: W entries are Bernoulli(p).

    Deterministic per seed. The returned model hashes with
    winner-take-all at the given alpha.
    """
    d = check_positive_int(d, "d")
    D = check_positive_int(D, "D")
    if not 0 < p < 1:
        raise ValueError(f"p must be in (0, 1), got {p}")
    alpha = check_alpha(alpha, D)
    rng = check_random_state(seed)
    W = (rng.random((D, d)) < p).astype(np.float64)
    return HashModel(scheme="fruitfly", W=W, alpha=alpha, center=np.zeros(d))


def gaussian_orthogonal_init(d, D, seed=None, alpha=1):
    """Gaussian projection with exactly orthonormal columns (W^T W = I).

    Requires D >= d; fewer rows than columns cannot have orthonormal
    columns. This is also the starting point of the Procrustean trainer,
    so the returned scheme tag is "posh".
    """
    d = check_positive_int(d, "d")
    D = check_positive_int(D, "D")
    if D < d:
        raise ValueError(
            f"orthonormal columns need D >= d, got D={D} < d={d}"
        )
    alpha = check_alpha(alpha, D)
    rng = check_random_state(seed)
    W = orthogonalize(rng.standard_normal((D, d)))
    return HashModel(scheme="posh", W=W, alpha=alpha, center=np.zeros(d))


def lsh_init(d, n_bits, seed=None):
    """Dense Gaussian projection hashed by the sign function."""
    d = check_positive_int(d, "d")
    n_bits = check_positive_int(n_bits, "n_bits")
    rng = check_random_state(seed)
    W = rng.standard_normal((n_bits, d))
    return HashModel(scheme="lsh", W=W, alpha=0, center=np.zeros(d))


def gram_statistics(W):
    """Sample statistics of the Gram matrix W^T W of a binary projection.

    For W with i.i.d. Bernoulli(p) entries and D rows, the diagonal
    entries have mean D*p and variance D*p*(1-p); off-diagonal entries
    have mean D*p^2 and variance D*p^2*(1-p^2).

    Returns
    -------
    dict with keys diag_mean, diag_var, offdiag_mean, offdiag_var
    (variances use the ddof=1 sample estimator).
    """
    W = check_matrix(W, "W")
    if not np.isin(W, (0.0, 1.0)).all():
        raise ValueError("W must be binary (entries 0 or 1)")
    d = W.shape[1]
    if d < 2:
        raise ValueError("off-diagonal statistics need at least 2 columns")
    G = W.T @ W
    diag = np.diag(G)
    off = G[~np.eye(d, dtype=bool)]
    return {
        "diag_mean": float(diag.mean()),
        "diag_var": float(diag.var(ddof=1)),
        "offdiag_mean": float(off.mean()),
        "offdiag_var": float(off.var(ddof=1)),
    }


def expected_gram_statistics(D, p):
    """Theoretical counterparts of gram_statistics for Bernoulli(p) W."""
    return {
        "diag_mean": D * p,
        "diag_var": D * p * (1 - p),
        "offdiag_mean": D * p * p,
        "offdiag_var": D * p * p * (1 - p * p),
    }


def sample_gram_statistics(d, D, p, samples, seed=None):
    """Aggregate Gram statistics over freshly sampled Bernoulli matrices.

    Pools entry-level means and variances across matrices and estimates
    the standard error of each pooled mean from the spread of per-matrix
    means (which are independent across matrices, unlike entries within
    one matrix).

    Returns
    -------
    dict with observed diag/offdiag means and variances, their standard
    errors (diag_se, offdiag_se), and the expected values.
    """
    samples = check_positive_int(samples, "samples", minimum=2)
    rng = check_random_state(seed)
    per_matrix = [
        gram_statistics(fruitfly_init(d, D, p, seed=rng).W) for _ in range(samples)
    ]
    stacked = {key: np.array([s[key] for s in per_matrix]) for key in per_matrix[0]}
    out = {
        "diag_mean": float(stacked["diag_mean"].mean()),
        "diag_var": float(stacked["diag_var"].mean()),
        "offdiag_mean": float(stacked["offdiag_mean"].mean()),
        "offdiag_var": float(stacked["offdiag_var"].mean()),
        "diag_se": float(stacked["diag_mean"].std(ddof=1) / np.sqrt(samples)),
        "offdiag_se": float(stacked["offdiag_mean"].std(ddof=1) / np.sqrt(samples)),
        "samples": samples,
    }
    out["expected"] = expected_gram_statistics(D, p)
    return out


class FruitFlyHasher(SparseHasherMixin, BaseHasher):
    """Random sparse-Bernoulli expansion followed by winner-take-all.

    The untrained baseline: fit only learns the stored center (and PCA
    when the input dimension exceeds n_bits) and samples W.

    Parameters
    ----------
    n_bits : int
        Code length D.
    alpha : int
        Set bits per code.
    p : float
        Bernoulli parameter for W entries.
    random_state : int, Generator, or None
    """

    def __init__(self, n_bits=1024, alpha=64, p=0.2, random_state=None):
        self.n_bits = n_bits
        self.alpha = alpha
        self.p = p
        self.random_state = random_state

    def _fit_core(self, X, rng):
        return fruitfly_init(X.shape[1], self.n_bits, self.p, rng, alpha=self.alpha)


class LSHHasher(BaseHasher):
    """Classic sign-random-projection hashing (dense codes).

    Parameters
    ----------
    n_bits : int
        Number of sign bits D'.
    random_state : int, Generator, or None
    """

    def __init__(self, n_bits=64, random_state=None):
        self.n_bits = n_bits
        self.random_state = random_state

    def _pca_components(self, n, d):
        if d > self.n_bits:
            return self.n_bits
        return None

    def _fit_core(self, X, rng):
        return lsh_init(X.shape[1], self.n_bits, rng)
