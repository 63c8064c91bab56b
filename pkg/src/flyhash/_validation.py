"""Input validation helpers shared across estimators and functions."""

import numbers

import numpy as np


def check_matrix(X, name="X", dtype=np.float64, min_rows=1):
    """Coerce X to a 2-D float array and reject malformed input.

    Returns a C-contiguous array of the requested dtype. Raises
    ValueError for wrong dimensionality, empty input, or non-finite
    entries.
    """
    X = np.asarray(X, dtype=dtype)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got ndim={X.ndim}")
    if X.shape[0] < min_rows:
        raise ValueError(f"{name} needs at least {min_rows} row(s), got {X.shape[0]}")
    if X.shape[1] == 0:
        raise ValueError(f"{name} has zero columns")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return np.ascontiguousarray(X)


def check_vector(x, name="x", dtype=np.float64):
    """Coerce x to a 1-D float array with finite entries."""
    x = np.asarray(x, dtype=dtype)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-d array, got ndim={x.ndim}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return np.ascontiguousarray(x)


def check_positive_int(value, name, minimum=1):
    """Validate an integral parameter with a lower bound; return int."""
    if not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_alpha(alpha, n_bits):
    """Validate a sparsity level against the code length."""
    alpha = check_positive_int(alpha, "alpha")
    n_bits = check_positive_int(n_bits, "n_bits")
    if alpha > n_bits:
        raise ValueError(f"alpha ({alpha}) must not exceed n_bits ({n_bits})")
    return alpha


def check_codes(codes, alpha, n_bits=None, name="codes"):
    """Validate sparse codes given as per-row sorted active-bit indices.

    Each row must hold exactly ``alpha`` strictly increasing indices
    (hence no duplicates), all below ``n_bits`` when given. Returns a
    C-contiguous uint32 array of shape (n, alpha).
    """
    codes = np.asarray(codes)
    if codes.ndim == 1:
        codes = codes.reshape(1, -1)
    if codes.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array of bit indices")
    if codes.shape[1] != alpha:
        raise ValueError(
            f"{name} rows must hold exactly {alpha} indices, got {codes.shape[1]}"
        )
    if not np.issubdtype(codes.dtype, np.integer):
        raise ValueError(f"{name} must be integer-typed, got {codes.dtype}")
    if codes.size and codes.min() < 0:
        raise ValueError(f"{name} contains negative bit indices")
    if n_bits is not None and codes.size and codes.max() >= n_bits:
        raise ValueError(f"{name} contains indices >= n_bits ({n_bits})")
    if alpha > 1 and codes.size and not np.all(codes[:, 1:] > codes[:, :-1]):
        raise ValueError(f"{name} rows must be strictly increasing")
    return np.ascontiguousarray(codes.astype(np.uint32, copy=False))


def check_random_state(seed):
    """Return a Generator from a seed, Generator, or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
