"""Winner-take-all sparsification: keep the alpha largest entries as set
bits and zero the rest.

Codes are represented as strictly increasing index arrays (uint32) rather
than dense 0/1 vectors. Ties between equal values resolve to the lowest
index, which makes the operation deterministic and matches the unique
minimizer of ||h - y||^2 over binary h with exactly alpha ones under that
tie rule.
"""

import numpy as np

from ._validation import check_alpha, check_matrix, check_vector


def wta(y, alpha):
    """Indices of the alpha largest entries of y, sorted ascending.

    Ties between equal values are broken toward the lowest index.

    Parameters
    ----------
    y : (D,) array_like
    alpha : int
        Number of set bits, 1 <= alpha <= D.

    Returns
    -------
    (alpha,) uint32 array of strictly increasing bit positions.
    """
    y = check_vector(y, "y")
    alpha = check_alpha(alpha, y.shape[0])
    # Stable sort on the negated values: descending by value, ascending by
    # index among ties.
    order = np.argsort(-y, kind="stable")[:alpha]
    order.sort()
    return order.astype(np.uint32)


def wta_batch(Y, alpha):
    """Row-wise winner-take-all over a (n, D) matrix.

    Equivalent to stacking ``wta(row, alpha)`` for every row.

    Returns
    -------
    (n, alpha) uint32 array; each row strictly increasing.
    """
    Y = check_matrix(Y, "Y")
    alpha = check_alpha(alpha, Y.shape[1])
    order = np.argsort(-Y, axis=1, kind="stable")[:, :alpha]
    order.sort(axis=1)
    return order.astype(np.uint32)


def scale_invariance_check(y, beta, alpha):
    """True iff scaling y by the positive factor beta leaves the code unchanged.

    Winner-take-all depends only on the ordering of entries, which a
    positive scale preserves, so this holds for every beta > 0.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    y = check_vector(y, "y")
    return bool(np.array_equal(wta(beta * y, alpha), wta(y, alpha)))
