"""Binary sparse lifting trained by ADMM.

The optimization seeks an alpha-sparse binary lift Y whose Gram matrix
matches the input Gram: min 1/4 ||X^T X - Y^T Y||_F^2 over binary
column-alpha-sparse Y, relaxed by splitting Y into a box-constrained
continuous copy and a binary copy H coupled through a scaled dual L.

Per round (penalty fixed at 1):
  H-step  H <- column-wise WTA_alpha(Y + L)           (closed form)
  Y-step  minimize 1/4||G - Y^T Y||^2 + 1/2||H - Y + L||^2 over 0<=Y<=1
          by projected gradient descent with backtracking
  L-step  L <- L + (H - Y)
stopping early once ||H - Y||_F / sqrt(D n) < 1e-4. The final projection
W solves the unconstrained least squares min ||W X - Y||^2, so hashing
new points reduces to WTA_alpha(W x).
"""

import numpy as np

from .._validation import (
    check_alpha,
    check_matrix,
    check_positive_int,
    check_random_state,
)
from ..model import HashModel
from ..wta import wta_batch
from .base import BaseHasher, SparseHasherMixin, unit_rows_skip_zeros

_LAMBDA = 1.0
_GAP_TOL = 1e-4
_ARMIJO = 1e-4
_MAX_INNER = 200
_MAX_BACKTRACK = 60


def _codes_to_columns(codes, D):
    """(n, alpha) index rows -> dense (D, n) 0/1 matrix."""
    n = codes.shape[0]
    H = np.zeros((D, n))
    H[codes.astype(np.intp).T, np.arange(n)] = 1.0
    return H


def _y_objective(Y, G, H, L):
    R = Y.T @ Y - G
    P = H - Y + L / _LAMBDA
    return 0.25 * float((R * R).sum()) + 0.5 * _LAMBDA * float((P * P).sum())


def _y_gradient(Y, G, H, L):
    return Y @ (Y.T @ Y - G) + _LAMBDA * (Y - H) - L

def solve_y_step(Y, G, H, L):
    """Box-constrained descent on the Y subproblem.

    Starts from Y clipped into [0, 1] and takes projected gradient steps
    with a backtracking line search (sufficient-decrease 1e-4), so the
    subproblem objective never increases and the result stays in the box.

    Returns
    -------
    (Y_new, trace) where trace lists the objective at the start and after
    every accepted step.
    """
    Y = np.clip(Y, 0.0, 1.0)
    f = _y_objective(Y, G, H, L)
    trace = [f]
    step = 1.0 / max(1.0, np.abs(Y).max() * Y.shape[1])
    for _ in range(_MAX_INNER):
        g = _y_gradient(Y, G, H, L)
        accepted = False
        for _ in range(_MAX_BACKTRACK):
            Y_new = np.clip(Y - step * g, 0.0, 1.0)
            delta = Y_new - Y
            move = float((delta * delta).sum())
            if move == 0.0:
                break
            f_new = _y_objective(Y_new, G, H, L)
            if f_new <= f - _ARMIJO * move / step:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        Y, f = Y_new, f_new
        trace.append(f)
        step *= 1.3
        if move <= 1e-18 * Y.size:
            break
    return Y, trace


def train_bosl(X, D, alpha, K=50, seed=None, on_round=None):
    """Train the binary sparse lifting scheme.

    Parameters
    ----------
    X : (n, d) array
        Training samples; rows are unit-normalized internally (zero rows
        are rejected because the Gram-matching target is undefined).
    D : int
        Lifted code length.
    alpha : int
        Set bits per column of the lift.
    K : int
        Maximum ADMM rounds (early stop on the split gap).
    seed : int, Generator, or None
    on_round : callable or None
        Called as on_round(round_index, H, Y) after every dual update;
        H is (D, n) binary, Y is (D, n) in [0, 1].

    Returns
    -------
    HashModel with the least-squares projection W (D x d).
    """
    X = check_matrix(X, "X")
    D = check_positive_int(D, "D")
    alpha = check_alpha(alpha, D)
    K = check_positive_int(K, "K")
    rng = check_random_state(seed)

    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise ValueError("train_bosl: zero-norm rows cannot be unit-normalized")
    Xn = X / norms[:, None]
    n, d = Xn.shape
    Xt = Xn.T
    G = Xt.T @ Xt

    W1 = rng.standard_normal((D, d))
    Y = W1 @ Xt
    L = np.zeros((D, n))
    for rnd in range(K):
        H = _codes_to_columns(wta_batch((_LAMBDA * Y + L).T, alpha), D)
        Y, _ = solve_y_step(Y, G, H, L)
        L = L + _LAMBDA * (H - Y)
        if on_round is not None:
            on_round(rnd, H, Y)
        gap = float(np.linalg.norm(H - Y)) / np.sqrt(D * n)
        if gap < _GAP_TOL:
            break
    W = np.linalg.lstsq(Xt.T, Y.T, rcond=None)[0].T
    return HashModel(scheme="bosl", W=W, alpha=alpha, center=np.zeros(d))


class BOSLHasher(SparseHasherMixin, BaseHasher):
    """Estimator wrapper around the ADMM lifting trainer.

    Training cost grows with the square of the training-set size (an
    n x n Gram is matched), so keep fits at the few-thousand-sample
    scale.

    Parameters
    ----------
    n_bits : int
        Lifted code length D.
    alpha : int
        Set bits per code.
    rounds : int
        Maximum ADMM rounds.
    random_state : int, Generator, or None
    """

    def __init__(self, n_bits=1024, alpha=64, rounds=50, random_state=None):
        self.n_bits = n_bits
        self.alpha = alpha
        self.rounds = rounds
        self.random_state = random_state

    def _fit_core(self, X, rng):
        Xn, _ = unit_rows_skip_zeros(X, type(self).__name__)
        return train_bosl(Xn, self.n_bits, self.alpha, K=self.rounds, seed=rng)
