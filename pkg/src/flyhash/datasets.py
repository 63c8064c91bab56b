"""Dataset loading, synthesis, and experiment splits.

Binary formats follow the common ANN-benchmark layouts (fvecs/ivecs:
per-record little-endian i32 dimension then payload) plus raw float32
and CSV with a header row. Loaders reject malformed input with an error
naming the offending byte or line; writers round-trip bit-exactly.
"""

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._fileio import atomic_write_bytes, atomic_write_text
from ._validation import check_positive_int, check_random_state


@dataclass
class Dataset:
    """Feature matrix with optional integer class labels."""

    features: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = "unnamed"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be 2-d")
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (self.features.shape[0],):
                raise ValueError(
                    f"labels length {self.labels.shape} does not match "
                    f"{self.features.shape[0]} rows"
                )

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class Split:
    """Ids partitioning one population into disjoint target and query
    sets, with the training sample drawn from the targets."""

    train_ids: np.ndarray
    target_ids: np.ndarray
    query_ids: np.ndarray


def _load_veclike(path, payload_dtype, what):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) == 0:
        return np.empty((0, 0), dtype=payload_dtype)
    if len(blob) < 4:
        raise ValueError(f"{path}: truncated header at byte 0 ({len(blob)} bytes)")
    d = int(np.frombuffer(blob, dtype="<i4", count=1)[0])
    if d <= 0:
        raise ValueError(f"{path}: invalid dimension {d} at byte 0")
    record = 4 + 4 * d
    if len(blob) % record != 0:
        raise ValueError(
            f"{path}: file size {len(blob)} is not a multiple of the "
            f"{record}-byte record (truncated at byte {len(blob) - len(blob) % record})"
        )
    n = len(blob) // record
    raw = np.frombuffer(blob, dtype="<i4").reshape(n, 1 + d)
    dims = raw[:, 0]
    if not np.all(dims == d):
        bad = int(np.argmax(dims != d))
        raise ValueError(
            f"{path}: record {bad} at byte {bad * record} has dimension "
            f"{int(dims[bad])}, expected {d}"
        )
    payload = np.frombuffer(blob, dtype=payload_dtype).reshape(n, 1 + d)[:, 1:]
    return payload.copy()


def load_fvecs(path):
    """Float32 vector file -> Dataset (features only)."""
    features = _load_veclike(path, "<f4", "fvecs").astype(np.float64)
    return Dataset(features=features, name=str(path))


def load_ivecs(path):
    """Int32 vector file -> (n, d) int array (labels ship as d=1)."""
    return _load_veclike(path, "<i4", "ivecs").copy()


def write_fvecs(path, features):
    features = np.asarray(features, dtype=np.float32)
    if features.ndim != 2:
        raise ValueError("features must be 2-d")
    n, d = features.shape
    out = np.empty((n, 1 + d), dtype="<i4")
    out[:, 0] = d
    out[:, 1:] = features.astype("<f4").view("<i4")
    atomic_write_bytes(path, out.tobytes())


def write_ivecs(path, values):
    values = np.asarray(values, dtype=np.int32)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    n, d = values.shape
    out = np.empty((n, 1 + d), dtype="<i4")
    out[:, 0] = d
    out[:, 1:] = values
    atomic_write_bytes(path, out.tobytes())


def load_csv(path, label_column=None):
    """CSV with a header row -> Dataset.

    All columns parse as floats except the optional integer label
    column, selected by header name. Parse failures name the line and
    column.
    """
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return Dataset(features=np.empty((0, 0)), name=str(path))
        header = [h.strip() for h in header]
        label_idx = None
        if label_column is not None:
            if label_column not in header:
                raise ValueError(
                    f"{path}: label column {label_column!r} not in header {header}"
                )
            label_idx = header.index(label_column)
        rows = []
        labels = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: line {lineno} has {len(row)} fields, "
                    f"header has {len(header)}"
                )
            vals = []
            for col, cell in enumerate(row):
                if col == label_idx:
                    try:
                        labels.append(int(cell))
                    except ValueError:
                        raise ValueError(
                            f"{path}: line {lineno}, column {col + 1}: "
                            f"could not parse {cell!r} as an integer label"
                        ) from None
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: line {lineno}, column {col + 1}: "
                        f"could not parse {cell!r} as a number"
                    ) from None
            rows.append(vals)
    features = np.array(rows, dtype=np.float64) if rows else np.empty((0, 0))
    return Dataset(
        features=features,
        labels=np.array(labels, dtype=np.int64) if labels else None,
        name=str(path),
    )


def write_csv(path, features, labels=None, label_column="label"):
    features = np.asarray(features)
    header = [f"f{j}" for j in range(features.shape[1])]
    if labels is not None:
        header.append(label_column)
    lines = [",".join(header)]
    for i in range(features.shape[0]):
        cells = [repr(float(v)) for v in features[i]]
        if labels is not None:
            cells.append(str(int(labels[i])))
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_raw_f32(path, d):
    """Headerless little-endian float32 file; n inferred from the size."""
    d = check_positive_int(d, "d")
    with open(path, "rb") as fh:
        blob = fh.read()
    row = 4 * d
    if len(blob) % row != 0:
        raise ValueError(
            f"{path}: file size {len(blob)} is not a multiple of the "
            f"{row}-byte row (truncated at byte {len(blob) - len(blob) % row})"
        )
    features = np.frombuffer(blob, dtype="<f4").reshape(-1, d).astype(np.float64)
    return Dataset(features=features.copy(), name=str(path))


def write_raw_f32(path, features):
    features = np.asarray(features, dtype="<f4")
    atomic_write_bytes(path, features.tobytes())


def make_split(n, train_size=5000, n_queries=0, seed=None):
    """Partition n items into targets and held-out queries, then sample
    the training ids uniformly from the targets (without replacement).

    Deterministic per seed. Accepts a Dataset in place of n.
    """
    if isinstance(n, Dataset):
        n = n.n
    n = check_positive_int(n, "n")
    n_queries = check_positive_int(n_queries, "n_queries", minimum=0)
    train_size = check_positive_int(train_size, "train_size")
    if n_queries >= n:
        raise ValueError(f"n_queries ({n_queries}) must leave at least one target")
    if train_size > n - n_queries:
        raise ValueError(
            f"train_size ({train_size}) exceeds the target count ({n - n_queries})"
        )
    rng = check_random_state(seed)
    perm = rng.permutation(n)
    query_ids = np.sort(perm[:n_queries]).astype(np.int64)
    target_ids = np.sort(perm[n_queries:]).astype(np.int64)
    train_ids = np.sort(rng.choice(target_ids, size=train_size, replace=False)).astype(
        np.int64
    )
    return Split(train_ids=train_ids, target_ids=target_ids, query_ids=query_ids)


def synth_gaussian_mixture(classes, per_class, d, separation=1.0, noise=1.0, seed=None):
    """Labeled Gaussian mixture: class centers drawn uniformly on the
    sphere of radius `separation`, points = center + noise * N(0, I)."""
    classes = check_positive_int(classes, "classes")
    per_class = check_positive_int(per_class, "per_class")
    d = check_positive_int(d, "d")
    rng = check_random_state(seed)
    centers = rng.standard_normal((classes, d))
    norms = np.linalg.norm(centers, axis=1)
    norms[norms == 0] = 1.0
    centers = separation * centers / norms[:, None]
    features = np.repeat(centers, per_class, axis=0) + noise * rng.standard_normal(
        (classes * per_class, d)
    )
    labels = np.repeat(np.arange(classes, dtype=np.int64), per_class)
    name = f"gmm-c{classes}-n{per_class}-d{d}"
    return Dataset(features=features, labels=labels, name=name)
