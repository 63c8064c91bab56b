"""Centroid-based sparse hashing on the unit sphere.

Two trainers share the geometry. The batch trainer is spherical k-means:
assign each unit-normalized sample to its best-aligned centroid, replace
every centroid by the normalized sum of its samples, repeat; the
alignment objective sum_i max_j w_j . x_i never decreases across epochs.
The online trainer uses per-sample winner updates with a decaying
learning rate, pulling the winning centroid toward the sample while a
decay term drives centroid norms toward one.

Centroids that never win an assignment become zero rows and simply stop
participating (a zero dot product never beats a positive one).
"""

import numpy as np

from .._validation import (
    check_alpha,
    check_matrix,
    check_positive_int,
    check_random_state,
)
from ..linalg import normalize_rows
from ..model import HashModel
from .base import BaseHasher, SparseHasherMixin, TrainConfig, unit_rows_skip_zeros


def spherical_objective(W, X):
    """Alignment objective sum_i max_j w_j . x_i (raw dot products).

    Callers following the training protocol pass unit-normalized rows of
    X; W rows may be zero (dead centroids).
    """
    W = check_matrix(W, "W")
    X = check_matrix(X, "X")
    return float((X @ W.T).max(axis=1).sum())


def biohash_objective(W, X):
    """Online-dynamics objective: sum_i (w_j* . x_i) / ||w_j*|| where
    j* = argmax_l w_l . x_i (ties to the lowest index).

    The winner is chosen by raw dot product and its contribution is
    norm-corrected, matching the fixed point of the online update rule.
    Zero rows make the correction undefined, so they are rejected.
    """
    W = check_matrix(W, "W")
    X = check_matrix(X, "X")
    norms = np.linalg.norm(W, axis=1)
    if np.any(norms == 0):
        raise ValueError("W contains zero rows; the objective is undefined")
    dots = X @ W.T
    winners = dots.argmax(axis=1)
    picked = dots[np.arange(X.shape[0]), winners]
    return float((picked / norms[winners]).sum())


def train_spherical(X, D, cfg=None, alpha=1, on_epoch=None):
    """Spherical k-means trainer over unit-normalized samples.

    Parameters
    ----------
    X : (n, d) array
        Training samples; zero rows are skipped with a counted warning.
    D : int
        Number of centroids (= code length).
    cfg : TrainConfig or None
        Only epochs and seed are used; assignment is always full-batch.
    alpha : int
        Set bits the returned model uses at hashing time (training
        itself always assigns a single winner).
    on_epoch : callable or None
        Called as on_epoch(epoch_index, W) after each centroid update.

    Returns
    -------
    HashModel with unit-norm (or zero) rows.
    """
    X = check_matrix(X, "X")
    D = check_positive_int(D, "D")
    alpha = check_alpha(alpha, D)
    cfg = cfg or TrainConfig()
    epochs = check_positive_int(cfg.epochs, "epochs")
    rng = check_random_state(cfg.seed)

    Xn, _ = unit_rows_skip_zeros(X, "train_spherical")
    d = Xn.shape[1]
    W = normalize_rows(rng.standard_normal((D, d)))
    for epoch in range(epochs):
        winners = (Xn @ W.T).argmax(axis=1)
        M = np.zeros((D, d))
        np.add.at(M, winners, Xn)
        W = normalize_rows(M)
        if on_epoch is not None:
            on_epoch(epoch, W)
    return HashModel(scheme="spherical", W=W, alpha=alpha, center=np.zeros(d))


def train_biohash(X, D, lr0=0.02, epochs=50, seed=None, alpha=1, on_epoch=None):
    """Online winner-take-all Hebbian trainer.

    Per sample, the best-aligned centroid w_j (by raw dot product) moves
    by lr * (x - (w_j . x) w_j); the learning rate decays linearly across
    epochs, lr(t) = lr0 * (1 - t/epochs). Row norms converge toward 1 on
    unit-norm data. Update order is sequential and semantically
    significant, so this trainer is single-threaded by construction.
    """
    X = check_matrix(X, "X")
    if not lr0 > 0:
        raise ValueError(f"lr0 must be positive, got {lr0}")
    D = check_positive_int(D, "D")
    alpha = check_alpha(alpha, D)
    epochs = check_positive_int(epochs, "epochs")
    rng = check_random_state(seed)

    Xn, _ = unit_rows_skip_zeros(X, "train_biohash")
    d = Xn.shape[1]
    W = normalize_rows(rng.standard_normal((D, d)))
    for epoch in range(epochs):
        lr = lr0 * (1.0 - epoch / epochs)
        for x in Xn:
            j = int(np.argmax(W @ x))
            w = W[j]
            W[j] = w + lr * (x - (w @ x) * w)
        if on_epoch is not None:
            on_epoch(epoch, W)
    return HashModel(scheme="biohash", W=W, alpha=alpha, center=np.zeros(d))


class SphericalHasher(SparseHasherMixin, BaseHasher):
    """Spherical k-means hashing estimator.

    Parameters
    ----------
    n_bits : int
        Number of centroids D (code length).
    alpha : int
        Set bits per code at hashing time.
    epochs : int
    random_state : int, Generator, or None

    Attributes
    ----------
    model_ : HashModel
    objective_trace_ : list of float
        Alignment objective on the (normalized) training data per epoch.
    """

    def __init__(self, n_bits=1024, alpha=64, epochs=50, random_state=None):
        self.n_bits = n_bits
        self.alpha = alpha
        self.epochs = epochs
        self.random_state = random_state

    def _fit_core(self, X, rng):
        trace = []
        Xn, _ = unit_rows_skip_zeros(X, type(self).__name__)
        cfg = TrainConfig(epochs=self.epochs, seed=rng)
        model = train_spherical(
            Xn,
            self.n_bits,
            cfg,
            alpha=self.alpha,
            on_epoch=lambda e, W: trace.append(spherical_objective(W, Xn)),
        )
        self.objective_trace_ = trace
        return model


class BioHasher(SparseHasherMixin, BaseHasher):
    """Online Hebbian winner-take-all hashing estimator.

    Parameters
    ----------
    n_bits : int
        Number of centroids D (code length).
    alpha : int
        Set bits per code at hashing time.
    lr : float
        Initial learning rate (decays linearly to ~0 across epochs).
    epochs : int
    random_state : int, Generator, or None

    Attributes
    ----------
    model_ : HashModel
    objective_trace_ : list of float
        Norm-corrected alignment objective per epoch.
    """

    def __init__(self, n_bits=1024, alpha=64, lr=0.02, epochs=50, random_state=None):
        self.n_bits = n_bits
        self.alpha = alpha
        self.lr = lr
        self.epochs = epochs
        self.random_state = random_state

    def _fit_core(self, X, rng):
        trace = []
        Xn, _ = unit_rows_skip_zeros(X, type(self).__name__)
        model = train_biohash(
            Xn,
            self.n_bits,
            lr0=self.lr,
            epochs=self.epochs,
            seed=rng,
            alpha=self.alpha,
            on_epoch=lambda e, W: trace.append(biohash_objective(W, Xn)),
        )
        self.objective_trace_ = trace
        return model
