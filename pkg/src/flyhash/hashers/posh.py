"""Procrustean orthogonal sparse hashing: jointly fit winner-take-all
codes and an orthogonal-column projection by alternating between the
closed-form code assignment and the orthogonal Procrustes update.

The streaming trainer follows the accumulate/re-orthogonalize scheme: a
running matrix M starts at W, every sample adds s_i x_i^T with
s_i = WTA_alpha(W x_i), and W snaps back to the polar factor of M after
each mini-batch. The full-batch mode instead rebuilds M from the whole
dataset every round, which makes each round an exact alternating
minimization step of sum_i ||h_i - W x_i||^2 and hence the objective
non-increasing round over round.
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
from ..wta import wta_batch
from .base import BaseHasher, SparseHasherMixin, TrainConfig
from .random_proj import gaussian_orthogonal_init


def posh_objective(W, X, alpha):
    """Quantization objective sum_i ||WTA_alpha(W x_i) - W x_i||^2."""
    W = check_matrix(W, "W")
    X = check_matrix(X, "X")
    alpha = check_alpha(alpha, W.shape[0])
    Y = X @ W.T
    codes = wta_batch(Y, alpha).astype(np.intp)
    picked = np.take_along_axis(Y, codes, axis=1)
    # ||h - y||^2 = ||y||^2 - 2 sum_{j in code} y_j + alpha per sample.
    return float((Y * Y).sum() - 2.0 * picked.sum() + X.shape[0] * alpha)


def _scatter_accumulate(M, codes, Xb):
    """M += sum_i onehot(codes_i) x_i^T for a mini-batch."""
    onehot = np.zeros((Xb.shape[0], M.shape[0]))
    onehot[np.arange(Xb.shape[0])[:, None], codes.astype(np.intp)] = 1.0
    M += onehot.T @ Xb


def train_posh(X, D, alpha, cfg=None, on_round=None):
    """Train the Procrustean orthogonal sparse hasher.

    Parameters
    ----------
    X : (n, d) array
        Training samples (already preprocessed; requires D >= d).
    D : int
        Code length.
    alpha : int
        Set bits per code.
    cfg : TrainConfig or None
        epochs / mini_batch / seed / full_batch; defaults are 50 passes
        with mini-batches of 100.
    on_round : callable or None
        Called as on_round(round_index, W) after every projection update
        in full-batch mode, or after every epoch otherwise; useful for
        objective traces.

    Returns
    -------
    HashModel with orthonormal-column W (D x d).
    """
    X = check_matrix(X, "X")
    n, d = X.shape
    D = check_positive_int(D, "D")
    if D < d:
        raise ValueError(f"projection needs D >= d, got D={D} < d={d}")
    alpha = check_alpha(alpha, D)
    cfg = cfg or TrainConfig()
    epochs = check_positive_int(cfg.epochs, "epochs", minimum=0)
    rng = check_random_state(cfg.seed)

    model = gaussian_orthogonal_init(d, D, rng, alpha=alpha)
    W = model.W
    if cfg.full_batch:
        for rnd in range(epochs):
            M = np.zeros((D, d))
            codes = wta_batch(X @ W.T, alpha)
            _scatter_accumulate(M, codes, X)
            W = orthogonalize(M)
            if on_round is not None:
                on_round(rnd, W)
    else:
        mini_batch = check_positive_int(cfg.mini_batch, "mini_batch")
        M = W.copy()
        for epoch in range(epochs):
            for start in range(0, n, mini_batch):
                Xb = X[start : start + mini_batch]
                codes = wta_batch(Xb @ W.T, alpha)
                _scatter_accumulate(M, codes, Xb)
                W = orthogonalize(M)
            if on_round is not None:
                on_round(epoch, W)
    return HashModel(scheme="posh", W=W, alpha=alpha, center=np.zeros(d))


class POSHHasher(SparseHasherMixin, BaseHasher):
    """Estimator wrapper around the Procrustean trainer.

    With epochs=0 this is the plain Gaussian-orthogonal random projection
    (the trainer's starting point), which is itself a useful untrained
    scheme.

    Parameters
    ----------
    n_bits : int
        Code length D.
    alpha : int
        Set bits per code.
    epochs : int
        Training passes; 0 keeps the orthogonal initialization.
    batch_size : int
        Samples between projection updates in streaming mode.
    full_batch : bool
        Exact alternating minimization (one update per pass over all
        data, accumulator rebuilt each round).
    random_state : int, Generator, or None

    Attributes
    ----------
    model_ : HashModel
    objective_trace_ : list of float
        Quantization objective on the training data after each round.
    """

    def __init__(
        self,
        n_bits=1024,
        alpha=64,
        epochs=50,
        batch_size=100,
        full_batch=False,
        random_state=None,
    ):
        self.n_bits = n_bits
        self.alpha = alpha
        self.epochs = epochs
        self.batch_size = batch_size
        self.full_batch = full_batch
        self.random_state = random_state

    def _fit_core(self, X, rng):
        trace = []
        cfg = TrainConfig(
            epochs=self.epochs,
            mini_batch=self.batch_size,
            seed=rng,
            full_batch=self.full_batch,
        )
        model = train_posh(
            X,
            self.n_bits,
            self.alpha,
            cfg,
            on_round=lambda rnd, W: trace.append(posh_objective(W, X, self.alpha)),
        )
        self.objective_trace_ = trace
        return model
