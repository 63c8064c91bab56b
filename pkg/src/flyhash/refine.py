"""Candidate refinement: reconstruct vectors from their codes and re-rank
Hamming candidates by reconstructed Euclidean distance.

The linear decoder solves the least-squares problem min sum_i
||x_i - Dmat h_i||^2 over the decoding matrix once, in a single pass;
decoding a code is then just a sum of alpha columns. The iterative
decoder starts from the linear decode and repeatedly nudges the estimate
so that re-hashing it matches the observed code.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_codes, check_matrix, check_positive_int, check_vector
from .model import hash_vector
from .wta import wta

_RIDGE = 1e-8


@dataclass(frozen=True)
class LinearDecoder:
    """Code-to-vector map: decode(h) sums the columns of Dmat selected by
    the code's set bits."""

    Dmat: np.ndarray  # (d, D)

    @property
    def n_bits(self):
        return self.Dmat.shape[1]

    def decode(self, codes):
        """(n, alpha) index rows -> (n, d) reconstructions."""
        codes = np.asarray(codes)
        if codes.ndim == 1:
            codes = codes.reshape(1, -1)
        return self.Dmat.T[codes.astype(np.intp)].sum(axis=1)

    def decode_one(self, code):
        return self.decode(np.asarray(code).reshape(1, -1))[0]


def train_decoder(H, X, n_bits):
    """Fit the least-squares linear decoder from codes to vectors.

    Parameters
    ----------
    H : (n, alpha) uint32 array
        Sparse codes (sorted set-bit indices).
    X : (n, d) array
        Vectors the codes should reconstruct.
    n_bits : int
        Code length D.

    Solved by normal equations on the D x D Gram with ridge 1e-8, which
    keeps the system solvable when some bits never fire.
    """
    X = check_matrix(X, "X")
    n_bits = check_positive_int(n_bits, "n_bits")
    H = np.asarray(H)
    if H.ndim != 2:
        raise ValueError("H must be a 2-d array of set-bit indices")
    H = check_codes(H, H.shape[1], n_bits, name="H")
    if H.shape[0] != X.shape[0]:
        raise ValueError(
            f"H has {H.shape[0]} codes but X has {X.shape[0]} rows"
        )
    n = X.shape[0]
    G = np.zeros((n_bits, n_bits))
    B = np.zeros((n_bits, X.shape[1]))
    block = max(1, min(n, 2048))
    for start in range(0, n, block):
        rows = slice(start, min(start + block, n))
        dense = np.zeros((X[rows].shape[0], n_bits))
        dense[np.arange(dense.shape[0])[:, None], H[rows].astype(np.intp)] = 1.0
        G += dense.T @ dense
        B += dense.T @ X[rows]
    G[np.diag_indices_from(G)] += _RIDGE
    Dmat = np.linalg.solve(G, B).T
    return LinearDecoder(Dmat=Dmat)


def refine(index, model, decoder, x_q, k, oversample=2.0):
    """Hamming-retrieve an oversampled candidate set, then re-rank by
    distance between the query and each candidate's decoded vector.

    Returns the top-k candidate ids (ascending reconstruction distance,
    ties by ascending id). An index smaller than k returns everything,
    re-ranked.
    """
    if not oversample >= 1:
        raise ValueError(f"oversample must be >= 1, got {oversample}")
    k = check_positive_int(k, "k")
    x_q = check_vector(x_q, "x_q")
    fetch = int(math.ceil(oversample * k))
    code = hash_vector(model, x_q)
    cand_ids, _ = index.query(code, fetch)
    if cand_ids.size == 0:
        return cand_ids
    recon = decoder.decode(index.codes_for(cand_ids))
    dists = np.linalg.norm(recon - x_q, axis=1)
    order = np.lexsort((cand_ids, dists))[:k]
    return cand_ids[order]


def sbiht_decode(h, W, decoder, max_iters=100, return_trace=False):
    """Iterative hard-thresholding decode of a sparse code.

    Starts from the linear decode and repeats: hash the estimate,
    compare against the observed code, and step opposite the code
    mismatch:

        b = WTA_alpha(W x),   x <- x - (1/sqrt(d*D)) W^T (b - h)

    The squared code mismatch ||b - h||^2 is tracked every iteration;
    the loop stops after two consecutive non-improving iterations, at
    max_iters, or the moment the codes agree, and the best iterate seen
    is returned.

    Parameters
    ----------
    h : (alpha,) sorted index array
    W : (D, d) array
        The projection the code came from (no centering/PCA of its own).
    decoder : LinearDecoder
    max_iters : int
        0 returns the plain linear decode.
    return_trace : bool
        Also return the list of ||b - h||^2 values, one per iteration.
    """
    W = check_matrix(W, "W")
    D, d = W.shape
    alpha = np.asarray(h).shape[-1]
    h = check_codes(h, alpha, D)[0]
    if max_iters < 0:
        raise ValueError(f"max_iters must be >= 0, got {max_iters}")
    x = decoder.decode_one(h)
    if max_iters == 0:
        return (x, []) if return_trace else x
    h_dense = np.zeros(D)
    h_dense[h] = 1.0
    scale = 1.0 / math.sqrt(d * D)
    best_x = x
    best_loss = np.inf
    bad_streak = 0
    trace = []
    for _ in range(max_iters):
        b = wta(W @ x, alpha)
        loss = 2 * alpha - 2 * np.intersect1d(b, h, assume_unique=True).size
        trace.append(loss)
        if loss < best_loss:
            best_loss = loss
            best_x = x.copy()
            bad_streak = 0
        else:
            bad_streak += 1
            if bad_streak >= 2:
                break
        if loss == 0:
            break
        b_dense = np.zeros(D)
        b_dense[b] = 1.0
        x = x - scale * (W.T @ (b_dense - h_dense))
    return (best_x, trace) if return_trace else best_x
