"""Fixed-popcount Hamming distance and the inverted index over sparse codes."""

from itertools import combinations

import numpy as np
import pytest

from flyhash.index import DenseHammingIndex, SparseHammingIndex, build_index, knn_query, sparse_hamming
from flyhash.model import HashModel, hash_batch


def dense_hamming_oracle(a, b, D):
    """Expand both codes to 0/1 vectors and count differing positions."""
    va = np.zeros(D, dtype=int)
    vb = np.zeros(D, dtype=int)
    va[np.asarray(a, dtype=int)] = 1
    vb[np.asarray(b, dtype=int)] = 1
    return int(np.abs(va - vb).sum())


def random_code(rng, D, alpha):
    return np.sort(rng.choice(D, size=alpha, replace=False)).astype(np.uint32)


def test_hand_examples():
    a = np.array([0, 3, 5], dtype=np.uint32)
    assert sparse_hamming(a, a) == 0
    b = np.array([0, 3, 7], dtype=np.uint32)
    assert sparse_hamming(a, b) == 2
    c = np.array([1, 2, 4], dtype=np.uint32)
    assert sparse_hamming(a, c) == 6


def test_exhaustive_small_space():
    # every pair of 2-subsets of {0..5}
    codes = [np.array(t, dtype=np.uint32) for t in combinations(range(6), 2)]
    for a in codes:
        for b in codes:
            assert sparse_hamming(a, b) == dense_hamming_oracle(a, b, 6)


def test_matches_dense_oracle_at_scale(rng):
    for _ in range(300):
        a = random_code(rng, 1024, 64)
        b = random_code(rng, 1024, 64)
        assert sparse_hamming(a, b) == dense_hamming_oracle(a, b, 1024)


def test_metric_properties(rng):
    for _ in range(100):
        a, b, c = (random_code(rng, 40, 7) for _ in range(3))
        assert sparse_hamming(a, b) == sparse_hamming(b, a)
        assert sparse_hamming(a, a) == 0
        assert sparse_hamming(a, b) <= sparse_hamming(a, c) + sparse_hamming(c, b)
        assert sparse_hamming(a, b) % 2 == 0  # equal popcount forces even distance


def brute_force_knn(codes, ids, q, k, D):
    d = np.array([dense_hamming_oracle(q, c, D) for c in codes])
    order = np.lexsort((ids, d))[:k]
    return ids[order], d[order]


def test_query_matches_brute_force(rng):
    D, alpha, n = 256, 12, 400
    codes = np.stack([random_code(rng, D, alpha) for _ in range(n)])
    ids = rng.choice(10_000, size=n, replace=False).astype(np.int64)
    index = SparseHammingIndex(D, alpha)
    index.add(codes, ids)
    for _ in range(20):
        q = random_code(rng, D, alpha)
        got_ids, got_d = index.query(q, 15)
        want_ids, want_d = brute_force_knn(codes, ids, q, 15, D)
        assert np.array_equal(got_ids, want_ids)
        assert np.array_equal(got_d, want_d)


def test_ties_break_by_ascending_id():
    index = SparseHammingIndex(8, 2)
    codes = np.array([[0, 1], [0, 1], [0, 1], [2, 3]], dtype=np.uint32)
    index.add(codes, np.array([30, 10, 20, 5]))
    ids, dists = index.query(np.array([0, 1], dtype=np.uint32), 4)
    assert list(ids) == [10, 20, 30, 5]
    assert list(dists) == [0, 0, 0, 4]


def test_k_larger_than_index_returns_all():
    index = SparseHammingIndex(8, 1)
    index.add(np.array([[0], [3]], dtype=np.uint32))
    ids, dists = index.query(np.array([0], dtype=np.uint32), 10)
    assert len(ids) == 2


def test_candidate_filter_restricts_results():
    index = SparseHammingIndex(8, 1)
    index.add(np.array([[0], [1], [2]], dtype=np.uint32), np.array([7, 8, 9]))
    ids, _ = index.query(np.array([0], dtype=np.uint32), 3,
                         candidate_ids=np.array([8, 9]))
    assert set(ids) == {8, 9}


def test_duplicate_ids_rejected():
    index = SparseHammingIndex(8, 1)
    index.add(np.array([[0]], dtype=np.uint32), np.array([4]))
    with pytest.raises(ValueError):
        index.add(np.array([[1]], dtype=np.uint32), np.array([4]))


def test_codes_for_and_positions():
    index = SparseHammingIndex(16, 2)
    codes = np.array([[0, 5], [1, 9]], dtype=np.uint32)
    index.add(codes, np.array([100, 50]))
    got = index.codes_for(np.array([50, 100]))
    assert np.array_equal(got, codes[[1, 0]])
    with pytest.raises(KeyError):
        index.codes_for(np.array([51]))


def test_query_batch_matches_sequential(rng):
    D, alpha = 64, 6
    codes = np.stack([random_code(rng, D, alpha) for _ in range(100)])
    index = SparseHammingIndex(D, alpha)
    index.add(codes)
    Q = np.stack([random_code(rng, D, alpha) for _ in range(12)])
    seq = [index.query(q, 5) for q in Q]
    for threads in (1, 4):
        batch_ids, batch_d = index.query_batch(Q, 5, n_threads=threads)
        for i, (ids, d) in enumerate(seq):
            assert np.array_equal(batch_ids[i], ids)
            assert np.array_equal(batch_d[i], d)


def test_empty_index_queries_cleanly():
    index = SparseHammingIndex(8, 2)
    ids, dists = index.query(np.array([0, 1], dtype=np.uint32), 3)
    assert len(ids) == 0 and len(dists) == 0


def test_save_load_round_trip(tmp_path, rng):
    D, alpha = 128, 8
    codes = np.stack([random_code(rng, D, alpha) for _ in range(50)])
    ids = rng.choice(1000, size=50, replace=False)
    index = SparseHammingIndex(D, alpha)
    index.add(codes, ids)
    path = tmp_path / "index.bin"
    index.save(path)

    loaded = SparseHammingIndex.load(path)
    assert loaded.n_bits == D and loaded.alpha == alpha
    q = random_code(rng, D, alpha)
    a_ids, a_d = index.query(q, 10)
    b_ids, b_d = loaded.query(q, 10)
    assert np.array_equal(a_ids, b_ids)
    assert np.array_equal(a_d, b_d)
    # and the file itself is stable under a rewrite
    path2 = tmp_path / "again.bin"
    loaded.save(path2)
    assert path.read_bytes() == path2.read_bytes()


def test_load_rejects_corrupt_file(tmp_path, rng):
    index = SparseHammingIndex(16, 2)
    index.add(np.array([[0, 1]], dtype=np.uint32))
    path = tmp_path / "index.bin"
    index.save(path)
    blob = path.read_bytes()
    bad = tmp_path / "bad.bin"
    bad.write_bytes(blob[:-2])
    with pytest.raises(ValueError):
        SparseHammingIndex.load(bad)
    bad.write_bytes(b"XXXXX" + blob[5:])
    with pytest.raises(ValueError):
        SparseHammingIndex.load(bad)


def unpacked_hamming(a_bits, b_bits):
    # unpackbits yields uint8; widen before subtracting to avoid wraparound
    ua = np.unpackbits(a_bits).astype(int)
    ub = np.unpackbits(b_bits).astype(int)
    return int(np.abs(ua - ub).sum())


def test_dense_index_matches_unpacked_oracle(rng):
    n_bits = 32
    codes = rng.integers(0, 256, size=(60, 4), dtype=np.uint8)
    index = DenseHammingIndex(n_bits)
    index.add(codes)
    q = rng.integers(0, 256, size=4, dtype=np.uint8)
    ids, dists = index.query(q, 60)
    want = np.array([unpacked_hamming(q, c) for c in codes])
    order = np.lexsort((np.arange(60), want))
    assert np.array_equal(ids, order)
    assert np.array_equal(dists, want[order])


def test_build_index_dispatches_on_scheme(rng):
    sparse_model = HashModel(scheme="fruitfly", W=rng.random((32, 6)), alpha=4,
                             center=np.zeros(6))
    X = rng.normal(size=(20, 6))
    codes = hash_batch(sparse_model, X)
    idx = build_index(sparse_model, codes)
    assert isinstance(idx, SparseHammingIndex)
    ids, _ = knn_query(idx, codes[3], 1)
    assert ids[0] == 3

    dense_model = HashModel(scheme="lsh", W=rng.normal(size=(16, 6)), alpha=0,
                            center=np.zeros(6))
    dcodes = hash_batch(dense_model, X)
    didx = build_index(dense_model, dcodes)
    assert isinstance(didx, DenseHammingIndex)
    ids, dists = knn_query(didx, dcodes[7], 1)
    assert ids[0] == 7 and dists[0] == 0
