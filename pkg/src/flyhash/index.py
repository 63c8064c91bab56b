"""Hamming-space indexes over hash codes.

Sparse codes with a fixed popcount admit the identity

    dist(a, b) = 2*alpha - 2*|indices(a) & indices(b)|

so distances need only the intersection size of two alpha-element index
lists, never a length-D vector. The index stores codes as contiguous
(n, alpha) uint32 rows and answers queries by a membership-table lookup
costing alpha operations per stored code. Dense sign codes use packed
bytes and popcount.

Queries rank by ascending distance with ties broken by ascending id, and
are read-only: a frozen index is safe to query from many threads.

Index file format (little-endian): magic "SPIX1", u32 D, u32 alpha,
u64 n, then n records of (u64 id, alpha x u32 indices). Round-trips
bit-exactly.
"""

import struct

import numpy as np

from ._fileio import atomic_write_bytes
from ._validation import check_codes, check_positive_int

_MAGIC = b"SPIX1"


def sparse_hamming(a, b):
    """Hamming distance between two fixed-popcount sparse codes.

    Both codes must be sorted index arrays of the same length alpha;
    the distance is 2*alpha - 2*(intersection size).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(
            f"codes must have equal set-bit counts, got {a.shape} vs {b.shape}"
        )
    alpha = a.shape[0]
    a = check_codes(a, alpha)[0]
    b = check_codes(b, alpha)[0]
    overlap = np.intersect1d(a, b, assume_unique=True).size
    return int(2 * alpha - 2 * overlap)


class SparseHammingIndex:
    """Exact k-NN search over fixed-popcount sparse codes.

    Parameters
    ----------
    n_bits : int
        Code length D (bit positions are in [0, D)).
    alpha : int
        Set bits per code.
    """

    def __init__(self, n_bits, alpha):
        self.n_bits = check_positive_int(n_bits, "n_bits")
        self.alpha = check_positive_int(alpha, "alpha")
        if self.alpha > self.n_bits:
            raise ValueError(f"alpha ({alpha}) must not exceed n_bits ({n_bits})")
        self._codes = np.empty((0, self.alpha), dtype=np.uint32)
        self._ids = np.empty(0, dtype=np.int64)
        self._sorted_ids = self._ids
        self._sorted_pos = np.empty(0, dtype=np.int64)

    def __len__(self):
        return self._codes.shape[0]

    @property
    def ids(self):
        return self._ids

    @property
    def codes(self):
        return self._codes

    def add(self, codes, ids=None):
        """Append codes with the given ids (default: next free integers).

        Ids must be non-negative and unique across the whole index.
        """
        codes = check_codes(codes, self.alpha, self.n_bits)
        n = codes.shape[0]
        if ids is None:
            start = int(self._ids.max()) + 1 if len(self) else 0
            ids = np.arange(start, start + n, dtype=np.int64)
        else:
            ids = np.asarray(ids)
            if ids.shape != (n,):
                raise ValueError(f"ids must have shape ({n},), got {ids.shape}")
            if not np.issubdtype(ids.dtype, np.integer):
                raise ValueError("ids must be integers")
            ids = ids.astype(np.int64)
            if ids.size and ids.min() < 0:
                raise ValueError("ids must be non-negative")
        merged = np.concatenate([self._ids, ids])
        if np.unique(merged).size != merged.size:
            raise ValueError("duplicate ids in index")
        self._codes = np.concatenate([self._codes, codes], axis=0)
        self._ids = merged
        order = np.argsort(self._ids, kind="stable")
        self._sorted_ids = self._ids[order]
        self._sorted_pos = order
        return self

    def _positions_for(self, ids):
        ids = np.asarray(ids, dtype=np.int64)
        loc = np.searchsorted(self._sorted_ids, ids)
        bad = (loc >= self._sorted_ids.size) | (
            self._sorted_ids[np.minimum(loc, self._sorted_ids.size - 1)] != ids
        )
        if bad.any():
            missing = ids[bad][:5]
            raise KeyError(f"ids not in index: {missing.tolist()}")
        return self._sorted_pos[loc]

    def codes_for(self, ids):
        """Stored codes for the given ids, in the given order."""
        return self._codes[self._positions_for(ids)]

    def query(self, code, k, candidate_ids=None):
        """Top-k by ascending Hamming distance, ties by ascending id.

        Parameters
        ----------
        code : (alpha,) sorted index array
        k : int
        candidate_ids : array or None
            Restrict the search to these ids (used by the coarse
            quantizer route).

        Returns
        -------
        (ids, distances) arrays of length min(k, candidates).
        """
        k = check_positive_int(k, "k")
        code = check_codes(code, self.alpha, self.n_bits)[0]
        if len(self) == 0:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        if candidate_ids is not None:
            pos = self._positions_for(candidate_ids)
            codes = self._codes[pos]
            ids = self._ids[pos]
        else:
            codes = self._codes
            ids = self._ids
        member = np.zeros(self.n_bits, dtype=bool)
        member[code] = True
        overlap = member[codes].sum(axis=1)
        dists = 2 * self.alpha - 2 * overlap.astype(np.int64)
        order = np.lexsort((ids, dists))[:k]
        return ids[order], dists[order]

    def query_batch(self, codes, k, candidate_ids=None, n_threads=1):
        """Query many codes; row i of the outputs answers codes[i].

        Returns
        -------
        (ids, distances) int64 arrays of shape (n_queries, k'), where
        k' = min(k, candidate count).
        """
        codes = check_codes(codes, self.alpha, self.n_bits)
        if n_threads > 1 and codes.shape[0] >= 2 * n_threads:
            from concurrent.futures import ThreadPoolExecutor

            chunks = np.array_split(np.arange(codes.shape[0]), n_threads)
            with ThreadPoolExecutor(max_workers=n_threads) as pool:
                parts = list(
                    pool.map(
                        lambda idx: self._query_block(codes[idx], k, candidate_ids),
                        chunks,
                    )
                )
            return (
                np.concatenate([p[0] for p in parts], axis=0),
                np.concatenate([p[1] for p in parts], axis=0),
            )
        return self._query_block(codes, k, candidate_ids)

    def _query_block(self, codes, k, candidate_ids):
        out_ids = []
        out_dists = []
        for code in codes:
            ids, dists = self.query(code, k, candidate_ids)
            out_ids.append(ids)
            out_dists.append(dists)
        return np.array(out_ids, dtype=np.int64), np.array(out_dists, dtype=np.int64)

    def save(self, path):
        """Write the index in the binary record format; atomic."""
        header = _MAGIC + struct.pack("<IIQ", self.n_bits, self.alpha, len(self))
        records = np.empty(
            len(self),
            dtype=np.dtype(
                [("id", "<u8"), ("idx", "<u4", (self.alpha,))], align=False
            ),
        )
        records["id"] = self._ids.astype(np.uint64)
        records["idx"] = self._codes
        atomic_write_bytes(path, header + records.tobytes())

    @classmethod
    def load(cls, path):
        """Read an index written by save; bit-exact round trip."""
        with open(path, "rb") as fh:
            blob = fh.read()
        head = len(_MAGIC) + 16
        if len(blob) < head or blob[: len(_MAGIC)] != _MAGIC:
            raise ValueError(f"{path}: not an index file (bad magic at offset 0)")
        D, alpha, n = struct.unpack_from("<IIQ", blob, len(_MAGIC))
        dtype = np.dtype([("id", "<u8"), ("idx", "<u4", (alpha,))], align=False)
        expect = head + n * dtype.itemsize
        if len(blob) != expect:
            raise ValueError(
                f"{path}: expected {expect} bytes for {n} records at offset "
                f"{head}, file has {len(blob)}"
            )
        records = np.frombuffer(blob, dtype=dtype, count=n, offset=head)
        index = cls(D, alpha)
        if n:
            index.add(records["idx"].copy(), records["id"].astype(np.int64))
        return index


def knn_query(index, code, k):
    """Rank index entries by Hamming distance to the code.

    Returns (ids, distances), ascending distance with ties by ascending
    id; identical to a brute-force distance sort.
    """
    return index.query(code, k)


class DenseHammingIndex:
    """Exact k-NN search over packed sign codes (in-memory only).

    Codes are (n, ceil(n_bits/8)) uint8 rows as produced by dense-scheme
    hashing; padding bits are zero on both sides so they never affect
    distances.
    """

    def __init__(self, n_bits):
        self.n_bits = check_positive_int(n_bits, "n_bits")
        self._nbytes = (self.n_bits + 7) // 8
        self._codes = np.empty((0, self._nbytes), dtype=np.uint8)
        self._ids = np.empty(0, dtype=np.int64)

    def __len__(self):
        return self._codes.shape[0]

    @property
    def ids(self):
        return self._ids

    def add(self, codes, ids=None):
        codes = np.asarray(codes, dtype=np.uint8)
        if codes.ndim != 2 or codes.shape[1] != self._nbytes:
            raise ValueError(
                f"codes must be (n, {self._nbytes}) packed uint8, got {codes.shape}"
            )
        n = codes.shape[0]
        if ids is None:
            start = int(self._ids.max()) + 1 if len(self) else 0
            ids = np.arange(start, start + n, dtype=np.int64)
        else:
            ids = np.asarray(ids).astype(np.int64)
        merged = np.concatenate([self._ids, ids])
        if np.unique(merged).size != merged.size:
            raise ValueError("duplicate ids in index")
        self._codes = np.concatenate([self._codes, codes], axis=0)
        self._ids = merged
        return self

    def query(self, code, k, candidate_ids=None):
        """Top-k by ascending bit difference, ties by ascending id."""
        k = check_positive_int(k, "k")
        code = np.asarray(code, dtype=np.uint8).reshape(-1)
        if code.shape[0] != self._nbytes:
            raise ValueError(f"code must have {self._nbytes} bytes")
        if len(self) == 0:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        codes = self._codes
        ids = self._ids
        if candidate_ids is not None:
            mask = np.isin(ids, np.asarray(candidate_ids, dtype=np.int64))
            codes = codes[mask]
            ids = ids[mask]
        dists = np.bitwise_count(codes ^ code).sum(axis=1).astype(np.int64)
        order = np.lexsort((ids, dists))[:k]
        return ids[order], dists[order]

    def query_batch(self, codes, k, candidate_ids=None, n_threads=1):
        codes = np.asarray(codes, dtype=np.uint8)
        out = [self.query(c, k, candidate_ids) for c in codes]
        return (
            np.array([o[0] for o in out], dtype=np.int64),
            np.array([o[1] for o in out], dtype=np.int64),
        )


def build_index(model, codes, ids=None):
    """Index the given codes under the model's geometry (sparse or dense)."""
    if model.is_sparse:
        index = SparseHammingIndex(model.n_bits, model.alpha)
    else:
        index = DenseHammingIndex(model.n_bits)
    index.add(codes, ids)
    return index
