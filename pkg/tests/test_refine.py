"""Linear code decoding, candidate re-ranking, and iterative decoding."""

import numpy as np
import pytest

from flyhash.index import SparseHammingIndex
from flyhash.model import HashModel, hash_batch, hash_vector
from flyhash.refine import LinearDecoder, refine, sbiht_decode, train_decoder


def random_codes(rng, n, D, alpha):
    return np.stack([
        np.sort(rng.choice(D, size=alpha, replace=False)).astype(np.uint32)
        for _ in range(n)
    ])


def test_decoder_sums_selected_columns():
    Dmat = np.array([[1.0, 0.0, 10.0], [0.0, 2.0, 20.0]])
    dec = LinearDecoder(Dmat)
    h = np.array([0, 2], dtype=np.uint32)
    assert np.allclose(dec.decode_one(h), [11.0, 20.0])
    out = dec.decode(np.array([[0, 1], [1, 2]], dtype=np.uint32))
    assert np.allclose(out, [[1.0, 2.0], [10.0, 22.0]])


def test_training_recovers_exact_linear_generator(rng):
    # X built as D0 applied to codes: the least-squares fit must reproduce
    # the generator's predictions with zero residual
    D_bits, alpha, d, n = 24, 4, 6, 300
    D0 = rng.normal(size=(d, D_bits))
    H = random_codes(rng, n, D_bits, alpha)
    X = np.stack([D0[:, h].sum(axis=1) for h in H])
    dec = train_decoder(H, X, D_bits)
    assert np.allclose(dec.decode(H), X, atol=1e-6)


def test_training_minimizes_residual_locally(rng):
    D_bits, alpha, d, n = 16, 3, 4, 120
    H = random_codes(rng, n, D_bits, alpha)
    X = rng.normal(size=(n, d))
    dec = train_decoder(H, X, D_bits)
    base = float(((dec.decode(H) - X) ** 2).sum())
    for _ in range(60):
        bump = np.zeros_like(dec.Dmat)
        bump[rng.integers(d), rng.integers(D_bits)] = rng.normal() * 0.01
        perturbed = LinearDecoder(dec.Dmat + bump)
        assert float(((perturbed.decode(H) - X) ** 2).sum()) >= base - 1e-8


def test_refine_with_exact_decoder_orders_by_euclidean(rng):
    # stored codes chosen first, points defined as their exact decode, so
    # the decoder has zero residual on every indexed point
    d, D_bits, alpha = 6, 24, 4
    D0 = rng.normal(size=(d, D_bits))
    H = random_codes(rng, 200, D_bits, alpha)
    X = np.stack([D0[:, h].sum(axis=1) for h in H])
    dec = LinearDecoder(D0)

    model = HashModel(scheme="fruitfly", W=rng.random((D_bits, d)), alpha=alpha,
                      center=np.zeros(d))
    index = SparseHammingIndex(D_bits, alpha)
    index.add(H)

    x_q = X[17] + 1e-9
    got = refine(index, model, dec, x_q, k=5, oversample=40.0)
    # oversample large enough to cover everything: exact Euclidean top-5
    d_true = np.linalg.norm(X - x_q, axis=1)
    want = np.lexsort((np.arange(len(X)), d_true))[:5]
    assert np.array_equal(got, want)


def test_refine_oversample_one_permutes_candidates(rng):
    d, D_bits, alpha = 5, 16, 3
    X = rng.normal(size=(60, d))
    model = HashModel(scheme="fruitfly", W=rng.random((D_bits, d)), alpha=alpha,
                      center=np.zeros(d))
    codes = hash_batch(model, X)
    index = SparseHammingIndex(D_bits, alpha)
    index.add(codes)
    dec = train_decoder(codes, X, D_bits)

    x_q = rng.normal(size=d)
    h = hash_vector(model, x_q)
    plain_ids, _ = index.query(h, 8)
    refined = refine(index, model, dec, x_q, k=8, oversample=1.0)
    assert set(refined) == set(plain_ids)


def test_refine_small_index_returns_everything(rng):
    d, D_bits, alpha = 4, 8, 2
    X = rng.normal(size=(3, d))
    model = HashModel(scheme="fruitfly", W=rng.random((D_bits, d)), alpha=alpha,
                      center=np.zeros(d))
    codes = hash_batch(model, X)
    index = SparseHammingIndex(D_bits, alpha)
    index.add(codes)
    dec = train_decoder(codes, X, D_bits)
    assert len(refine(index, model, dec, rng.normal(size=d), k=10)) == 3


def test_sbiht_zero_iters_is_plain_decode(rng):
    Dmat = rng.normal(size=(5, 16))
    dec = LinearDecoder(Dmat)
    W = rng.normal(size=(16, 5))
    h = np.array([1, 4, 9], dtype=np.uint32)
    out = sbiht_decode(h, W, dec, max_iters=0)
    assert np.allclose(out, dec.decode_one(h))


def test_sbiht_consistent_code_stops_immediately(rng):
    # craft a decoder whose output already re-hashes to h
    W = rng.normal(size=(16, 5))
    x0 = rng.normal(size=5)
    from flyhash.wta import wta
    h = wta(W @ x0, 3)
    Dmat = np.zeros((5, 16))
    Dmat[:, h] = x0[:, None] / 3.0  # decode_one(h) == x0
    dec = LinearDecoder(Dmat)
    out, trace = sbiht_decode(h, W, dec, max_iters=50, return_trace=True)
    assert trace[0] == 0
    assert len(trace) == 1
    assert np.allclose(out, x0)


def test_sbiht_accepted_loss_never_increases(rng):
    for _ in range(20):
        W = rng.normal(size=(32, 8))
        Dmat = rng.normal(size=(8, 32)) * 0.1
        dec = LinearDecoder(Dmat)
        h = np.sort(rng.choice(32, size=5, replace=False)).astype(np.uint32)
        _, trace = sbiht_decode(h, W, dec, max_iters=40, return_trace=True)
        best = np.minimum.accumulate(trace)
        assert np.all(np.diff(best) <= 0)


def test_sbiht_returns_best_iterate(rng):
    W = rng.normal(size=(24, 6))
    dec = LinearDecoder(rng.normal(size=(6, 24)) * 0.2)
    h = np.sort(rng.choice(24, size=4, replace=False)).astype(np.uint32)
    out, trace = sbiht_decode(h, W, dec, max_iters=60, return_trace=True)
    from flyhash.wta import wta
    from flyhash.index import sparse_hamming
    final_loss = sparse_hamming(wta(W @ out, 4), h)
    assert final_loss == min(trace)
