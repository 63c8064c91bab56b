"""Shared estimator plumbing for all hashing schemes.

Every hasher follows the same protocol at fit time: validate the training
matrix, learn the stored center, optionally fit PCA (each scheme declares
its own rule for when and to how many components), train the scheme's
projection on the preprocessed data, and keep the assembled HashModel in
``model_``. ``transform`` then hashes new data with that frozen model, so
fitted hashers compose with pipeline tooling that expects the
fit/transform contract.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .._validation import check_matrix, check_random_state
from ..linalg import fit_center, pca_apply, pca_fit
from ..model import hash_batch


@dataclass
class TrainConfig:
    """Knobs shared by the iterative trainers.

    Attributes
    ----------
    epochs : int
        Passes over the training data.
    mini_batch : int
        Samples accumulated between projection updates.
    seed : int or None
        Generator seed; same seed, same data -> identical model.
    full_batch : bool
        Rebuild the accumulator from the whole dataset every round
        instead of streaming, making each round an exact alternating
        minimization step.
    """

    epochs: int = 50
    mini_batch: int = 100
    seed: Optional[int] = None
    full_batch: bool = False


class BaseHasher(BaseEstimator, TransformerMixin):
    """Common fit/transform machinery; subclasses train the projection.

    Subclasses implement ``_pca_components(n, d)`` (PCA target or None)
    and ``_fit_core(X, rng)`` returning a HashModel over the preprocessed
    data (zero center, no PCA; preprocessing is attached here).
    """

    def fit(self, X, y=None):
        X = check_matrix(X, "X")
        rng = check_random_state(self.random_state)
        center = fit_center(X)
        Xc = X - center
        k = self._pca_components(*X.shape)
        pca = None
        if k is not None and k != X.shape[1]:
            pca = pca_fit(Xc, k)
            Xp = pca_apply(pca, Xc)
        else:
            Xp = Xc
        core = self._fit_core(Xp, rng)
        self.model_ = core.with_preprocessing(center, pca)
        return self

    def transform(self, X, n_threads=1):
        """Hash rows of X with the fitted model.

        Sparse schemes return (n, alpha) uint32 sorted bit indices; dense
        schemes return (n, ceil(n_bits/8)) uint8 packed sign bits.
        """
        if not hasattr(self, "model_"):
            raise NotFittedError(
                f"This {type(self).__name__} instance is not fitted yet; "
                "call fit before transform"
            )
        return hash_batch(self.model_, X, n_threads=n_threads)

    def _pca_components(self, n, d):
        raise NotImplementedError

    def _fit_core(self, X, rng):
        raise NotImplementedError


class SparseHasherMixin:
    """PCA rule shared by the sparse (winner-take-all) schemes: when the
    input dimension exceeds the code length, project to alpha components
    first."""

    def _pca_components(self, n, d):
        if d > self.n_bits:
            return self.alpha
        return None


def unit_rows_skip_zeros(X, scheme):
    """Unit-normalize sample rows, dropping zero vectors with a warning.

    Returns the normalized matrix and the number of skipped rows.
    """
    import warnings

    norms = np.linalg.norm(X, axis=1)
    zero = norms == 0
    skipped = int(zero.sum())
    if skipped:
        warnings.warn(
            f"{scheme}: skipped {skipped} zero-norm input vector(s); "
            "unit normalization is undefined for them",
            UserWarning,
            stacklevel=2,
        )
        X = X[~zero]
        norms = norms[~zero]
    if X.shape[0] == 0:
        raise ValueError(f"{scheme}: no nonzero training vectors remain")
    return X / norms[:, None], skipped
