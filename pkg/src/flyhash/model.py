"""Hash model container, the hashing operation itself, and binary model
serialization.

A model bundles the projection matrix W together with the preprocessing
learned at training time (stored center, optional PCA). Hashing applies
center subtraction, then the optional PCA projection, then W, then either
winner-take-all (sparse schemes) or the sign function (dense schemes).

Serialization format (little-endian throughout)::

    magic "POSH1" | scheme tag u8 | d u32 | D u32 | alpha u32
    center: d float64
    pca flag u8 [k u32, mean: d float64, components: k*d float64 row-major]
    W: D*dp float64 row-major   (dp = k if PCA stored, else d)

Writing then reading reproduces a model bit-exactly.
"""

import struct
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ._fileio import atomic_write_bytes
from ._validation import check_matrix, check_vector
from .linalg import PcaTransform, pca_apply
from .wta import wta_batch

SPARSE_SCHEMES = ("fruitfly", "posh", "spherical", "biohash", "bosl")
DENSE_SCHEMES = ("lsh", "itq")
SCHEMES = SPARSE_SCHEMES + DENSE_SCHEMES


@dataclass(eq=False)
class HashModel:
    """A trained (or randomly initialized) hashing function.

    Attributes
    ----------
    scheme : str
        One of ``SCHEMES``. Sparse schemes emit alpha-sparse codes; dense
        schemes ("lsh", "itq") emit sign bits.
    W : (D, dp) array
        Projection applied after preprocessing; dp is the post-PCA
        dimension when ``pca`` is set, the raw input dimension otherwise.
    alpha : int
        Set-bit count for sparse schemes; 0 for dense schemes.
    center : (d,) array
        Mean subtracted from raw inputs before anything else.
    pca : PcaTransform or None
        Optional projection applied between centering and W.
    """

    scheme: str
    W: np.ndarray
    alpha: int
    center: np.ndarray
    pca: Optional[PcaTransform] = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        self.W = check_matrix(self.W, "W")
        self.center = check_vector(self.center, "center")
        if self.is_sparse:
            if not 1 <= self.alpha <= self.n_bits:
                raise ValueError(
                    f"alpha must be in [1, {self.n_bits}] for scheme "
                    f"{self.scheme!r}, got {self.alpha}"
                )
        elif self.alpha != 0:
            raise ValueError(f"alpha must be 0 for dense scheme {self.scheme!r}")
        expected = self.pca.k if self.pca is not None else self.center.shape[0]
        if self.W.shape[1] != expected:
            raise ValueError(
                f"W has {self.W.shape[1]} columns but the preprocessed "
                f"dimension is {expected}"
            )

    @property
    def is_sparse(self):
        return self.scheme in SPARSE_SCHEMES

    @property
    def n_bits(self):
        """Code length D (number of rows of W)."""
        return self.W.shape[0]

    @property
    def input_dim(self):
        """Dimension of raw input vectors (before centering/PCA)."""
        return self.center.shape[0]

    def preprocess(self, X):
        """Center and, when fitted with PCA, project raw inputs."""
        X = check_matrix(X, "X")
        if X.shape[1] != self.input_dim:
            raise ValueError(
                f"input has dimension {X.shape[1]}, model expects {self.input_dim}"
            )
        Xc = X - self.center
        if self.pca is not None:
            return pca_apply(self.pca, Xc)
        return Xc

    def project(self, X):
        """Raw inputs -> (n, D) activations W @ preprocess(x)."""
        return self.preprocess(X) @ self.W.T

    def with_preprocessing(self, center, pca=None):
        """Copy of this model with preprocessing fields replaced."""
        return replace(self, center=np.asarray(center, dtype=np.float64), pca=pca)

    def equals(self, other):
        """Exact (bit-level) equality of two models."""
        if self.scheme != other.scheme or self.alpha != other.alpha:
            return False
        if not (
            np.array_equal(self.W, other.W)
            and np.array_equal(self.center, other.center)
        ):
            return False
        if (self.pca is None) != (other.pca is None):
            return False
        if self.pca is not None:
            return np.array_equal(self.pca.mean, other.pca.mean) and np.array_equal(
                self.pca.components, other.pca.components
            )
        return True


def hash_batch(model, X, n_threads=1):
    """Hash every row of X.

    Returns
    -------
    (n, alpha) uint32 array of sorted bit indices for sparse schemes, or
    (n, ceil(D/8)) uint8 packed sign bits (big-endian bit order within a
    byte) for dense schemes. Batch hashing equals row-by-row hashing.
    """
    X = check_matrix(X, "X")
    if n_threads > 1 and X.shape[0] >= 2 * n_threads:
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(np.arange(X.shape[0]), n_threads)
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(lambda idx: _hash_chunk(model, X[idx]), chunks))
        return np.concatenate(parts, axis=0)
    return _hash_chunk(model, X)


def _hash_chunk(model, X):
    Y = model.project(X)
    if model.is_sparse:
        return wta_batch(Y, model.alpha)
    return np.packbits(Y > 0, axis=1)


def hash_vector(model, x):
    """Hash a single vector; see hash_batch for the output conventions."""
    x = check_vector(x, "x")
    return hash_batch(model, x.reshape(1, -1))[0]


_MAGIC = b"POSH1"


def save_model(model, path):
    """Serialize a model to the binary format described in the module docstring."""
    parts = [_MAGIC, struct.pack("<B", SCHEMES.index(model.scheme))]
    d = model.input_dim
    parts.append(struct.pack("<III", d, model.n_bits, model.alpha))
    parts.append(model.center.astype("<f8").tobytes())
    if model.pca is not None:
        parts.append(struct.pack("<BI", 1, model.pca.k))
        parts.append(model.pca.mean.astype("<f8").tobytes())
        parts.append(np.ascontiguousarray(model.pca.components).astype("<f8").tobytes())
    else:
        parts.append(struct.pack("<B", 0))
    parts.append(np.ascontiguousarray(model.W).astype("<f8").tobytes())
    atomic_write_bytes(path, b"".join(parts))


def load_model(path):
    """Read a model written by save_model; bit-exact round trip."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 13 or blob[: len(_MAGIC)] != _MAGIC:
        raise ValueError(f"{path}: not a model file (bad magic at offset 0)")
    off = len(_MAGIC)
    (tag,) = struct.unpack_from("<B", blob, off)
    off += 1
    if tag >= len(SCHEMES):
        raise ValueError(f"{path}: unknown scheme tag {tag} at offset {off - 1}")
    scheme = SCHEMES[tag]
    d, D, alpha = struct.unpack_from("<III", blob, off)
    off += 12

    def take_floats(count, what):
        nonlocal off
        end = off + 8 * count
        if end > len(blob):
            raise ValueError(
                f"{path}: truncated while reading {what} at offset {off} "
                f"(need {8 * count} bytes, have {len(blob) - off})"
            )
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off).copy()
        off = end
        return arr

    center = take_floats(d, "center")
    if off >= len(blob):
        raise ValueError(f"{path}: truncated before PCA flag at offset {off}")
    (flag,) = struct.unpack_from("<B", blob, off)
    off += 1
    pca = None
    dp = d
    if flag == 1:
        (k,) = struct.unpack_from("<I", blob, off)
        off += 4
        mean = take_floats(d, "pca mean")
        components = take_floats(k * d, "pca components").reshape(k, d)
        pca = PcaTransform(mean=mean, components=components)
        dp = k
    elif flag != 0:
        raise ValueError(f"{path}: bad PCA flag {flag} at offset {off - 1}")
    W = take_floats(D * dp, "projection matrix").reshape(D, dp)
    if off != len(blob):
        raise ValueError(f"{path}: {len(blob) - off} trailing bytes at offset {off}")
    return HashModel(scheme=scheme, W=W, alpha=int(alpha), center=center, pca=pca)
