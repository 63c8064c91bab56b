"""Dense linear-algebra substrate: thin SVD, orthogonalization, centering,
PCA, and row normalization.

All functions are pure and operate on float64 numpy arrays. Results are
deterministic: singular vectors follow a fixed sign convention so repeated
runs produce identical matrices.
"""

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import check_matrix, check_positive_int, check_vector


class SvdResult(NamedTuple):
    """Thin SVD factors: ``U @ diag(S) @ Vt`` reconstructs the input."""

    U: np.ndarray
    S: np.ndarray
    Vt: np.ndarray


@dataclass(frozen=True)
class PcaTransform:
    """Centering vector plus orthonormal principal directions.

    Attributes
    ----------
    mean : (d,) array
        Column means of the fitting data.
    components : (k, d) array
        Top-k right singular vectors of the centered data, one per row.
    """

    mean: np.ndarray
    components: np.ndarray

    @property
    def k(self):
        return self.components.shape[0]

    @property
    def input_dim(self):
        return self.mean.shape[0]


def thin_svd(M):
    """Thin singular value decomposition with a deterministic sign convention.

    Each column of U is flipped so its largest-magnitude entry is
    non-negative (rows of Vt are flipped to match), making the
    factorization reproducible across runs.

    Returns
    -------
    SvdResult
        U (m, r), S (r,) descending non-negative, Vt (r, n), with
        r = min(m, n).
    """
    M = check_matrix(M, "M")
    try:
        U, S, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"SVD did not converge for matrix of shape {M.shape[0]}x{M.shape[1]}"
        ) from exc
    # Sign fix: the largest-|entry| of each U column becomes non-negative.
    lead = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[lead, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    U = U * signs
    Vt = Vt * signs[:, None]
    return SvdResult(U, S, Vt)


def orthogonalize(M):
    """Nearest (semi-)orthogonal matrix to M: the polar factor U @ Vt.

    Maximizes trace(Q^T M) over matrices with orthonormal columns (tall
    input) or rows (wide input). Rank-deficient input still yields a valid
    orthogonal factor; a warning is emitted because the factor is then not
    unique.
    """
    M = check_matrix(M, "M")
    U, S, Vt = thin_svd(M)
    if S[-1] <= 1e-12 * max(S[0], 1e-300):
        warnings.warn(
            f"orthogonalize: input of shape {M.shape} is rank deficient; "
            "the orthogonal factor is not unique",
            RuntimeWarning,
            stacklevel=2,
        )
    return U @ Vt


def fit_center(X):
    """Column means of X, stored for later subtraction."""
    X = check_matrix(X, "X")
    return X.mean(axis=0)


def apply_center(X, mean):
    """Subtract a stored mean vector from every row of X."""
    X = check_matrix(X, "X")
    mean = check_vector(mean, "mean")
    if X.shape[1] != mean.shape[0]:
        raise ValueError(
            f"X has {X.shape[1]} columns but mean has {mean.shape[0]} entries"
        )
    return X - mean


def pca_fit(X, k):
    """Fit a k-component PCA transform on X.

    Components are the top-k right singular vectors of the centered data,
    so projected variance is non-increasing across components.
    """
    X = check_matrix(X, "X")
    n, d = X.shape
    k = check_positive_int(k, "k")
    if k > min(n, d):
        raise ValueError(f"k ({k}) must not exceed min(n, d) = {min(n, d)}")
    mean = X.mean(axis=0)
    _, _, Vt = thin_svd(X - mean)
    return PcaTransform(mean=mean, components=Vt[:k].copy())


def pca_apply(transform, X):
    """Project X onto the fitted principal directions after centering."""
    X = check_matrix(X, "X")
    if X.shape[1] != transform.input_dim:
        raise ValueError(
            f"X has {X.shape[1]} columns but the transform expects {transform.input_dim}"
        )
    return (X - transform.mean) @ transform.components.T


def normalize_rows(M):
    """Scale every row to unit 2-norm; zero rows pass through unchanged."""
    M = check_matrix(M, "M")
    norms = np.linalg.norm(M, axis=1)
    norms[norms == 0] = 1.0
    return M / norms[:, None]
