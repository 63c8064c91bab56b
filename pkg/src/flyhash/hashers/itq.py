"""Iterative quantization and its neighborhood-denoised variant.

ITQ rotates PCA-projected data so that quantizing to the nearest binary
vertex loses as little as possible: alternate the closed-form binary
assignment B = sign(VR) with the orthogonal Procrustes update of R. Both
steps solve their subproblem exactly, so the quantization loss
||B - VR||_F^2 never increases.

The denoised variant first replaces every sample by the mean of its k
exact Euclidean nearest neighbors (self excluded), then runs ITQ on the
smoothed data.
"""

import numpy as np

from .._validation import check_matrix, check_positive_int, check_random_state
from ..linalg import fit_center, orthogonalize, pca_apply, pca_fit
from ..model import HashModel
from .base import BaseHasher


def itq_rotation(V, iters=50, seed=None, R0=None, on_iter=None):
    """Alternating minimization of the quantization loss on projected data.

    Parameters
    ----------
    V : (n, bits) array
        PCA-projected (centered) data.
    iters : int
    seed : int, Generator, or None
        Used only when R0 is not given.
    R0 : (bits, bits) array or None
        Optional starting rotation; defaults to a random orthogonal
        matrix.
    on_iter : callable or None
        Called as on_iter(iteration, loss) with the loss before each
        rotation update.

    Returns
    -------
    (bits, bits) orthogonal rotation R.
    """
    V = check_matrix(V, "V")
    bits = V.shape[1]
    iters = check_positive_int(iters, "iters", minimum=0)
    if R0 is None:
        rng = check_random_state(seed)
        R = orthogonalize(rng.standard_normal((bits, bits)))
    else:
        R = check_matrix(R0, "R0")
        if R.shape != (bits, bits):
            raise ValueError(f"R0 must be ({bits}, {bits}), got {R.shape}")
    for it in range(iters):
        Z = V @ R
        B = np.where(Z > 0, 1.0, -1.0)
        if on_iter is not None:
            diff = B - Z
            on_iter(it, float((diff * diff).sum()))
        R = orthogonalize(V.T @ B)
    return R


def train_itq(X, bits, iters=50, seed=None, on_iter=None):
    """Full ITQ pipeline: center, PCA to `bits` components, learn the
    rotation. Requires bits <= min(n, d)."""
    X = check_matrix(X, "X")
    bits = check_positive_int(bits, "bits")
    if bits > X.shape[1]:
        raise ValueError(
            f"bits ({bits}) must not exceed the input dimension ({X.shape[1]})"
        )
    center = fit_center(X)
    pca = pca_fit(X - center, bits)
    V = pca_apply(pca, X - center)
    R = itq_rotation(V, iters=iters, seed=seed, on_iter=on_iter)
    return HashModel(scheme="itq", W=R.T, alpha=0, center=center, pca=pca)


def knnh_preprocess(X, k=20):
    """Replace each sample by the mean of its k nearest neighbors.

    Neighbors are exact (Euclidean, self excluded, distance ties broken
    by ascending index). Requires k < n.
    """
    X = check_matrix(X, "X", min_rows=2)
    k = check_positive_int(k, "k")
    n = X.shape[0]
    if k >= n:
        raise ValueError(f"k ({k}) must be smaller than the sample count ({n})")
    sq = (X * X).sum(axis=1)
    out = np.empty_like(X)
    block = max(1, min(n, 4_000_000 // max(n, 1)))
    for start in range(0, n, block):
        rows = slice(start, min(start + block, n))
        d2 = sq[rows, None] + sq[None, :] - 2.0 * (X[rows] @ X.T)
        np.clip(d2, 0.0, None, out=d2)
        for i in range(d2.shape[0]):
            d2[i, start + i] = np.inf
        neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out[rows] = X[neighbors].mean(axis=1)
    return out


class ITQHasher(BaseHasher):
    """Iterative-quantization estimator (dense sign codes).

    Always projects to n_bits principal components first, so n_bits must
    not exceed the data dimension.

    Parameters
    ----------
    n_bits : int
    n_iters : int
    random_state : int, Generator, or None

    Attributes
    ----------
    model_ : HashModel
    objective_trace_ : list of float
        Quantization loss per alternation.
    """

    def __init__(self, n_bits=64, n_iters=50, random_state=None):
        self.n_bits = n_bits
        self.n_iters = n_iters
        self.random_state = random_state

    def _pca_components(self, n, d):
        if self.n_bits > d:
            raise ValueError(
                f"n_bits ({self.n_bits}) must not exceed the input "
                f"dimension ({d})"
            )
        return self.n_bits

    def _fit_core(self, X, rng):
        trace = []
        R = itq_rotation(
            X, iters=self.n_iters, seed=rng, on_iter=lambda it, f: trace.append(f)
        )
        self.objective_trace_ = trace
        return HashModel(
            scheme="itq", W=R.T, alpha=0, center=np.zeros(X.shape[1])
        )


class KNNHHasher(ITQHasher):
    """ITQ on neighborhood-denoised data (dense sign codes).

    Parameters
    ----------
    n_bits : int
    n_neighbors : int
        Neighborhood size for the denoising average.
    n_iters : int
    random_state : int, Generator, or None
    """

    def __init__(self, n_bits=64, n_neighbors=20, n_iters=50, random_state=None):
        super().__init__(n_bits=n_bits, n_iters=n_iters, random_state=random_state)
        self.n_neighbors = n_neighbors

    def fit(self, X, y=None):
        X = check_matrix(X, "X")
        return super().fit(knnh_preprocess(X, self.n_neighbors))
