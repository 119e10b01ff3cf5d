import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrgm import graphon as gr
from lrgm.spectral import SignatureError, embed, sym_eigs_topk


def random_symmetric(n, rng):
    M = rng.standard_normal((n, n))
    return (M + M.T) / 2


def test_identity_topk():
    vals, vecs = sym_eigs_topk(np.eye(3), 2)
    np.testing.assert_allclose(vals, [1, 1])
    np.testing.assert_allclose(vecs.T @ vecs, np.eye(2), atol=1e-12)


def test_magnitude_order():
    vals, _ = sym_eigs_topk(np.diag([3.0, -5.0, 1.0]), 2)
    np.testing.assert_allclose(vals, [-5, 3])


def test_full_reconstruction_and_residuals(rng):
    M = random_symmetric(6, rng)
    vals, V = sym_eigs_topk(M, 6)
    np.testing.assert_allclose(V @ np.diag(vals) @ V.T, M, atol=1e-8)
    for lam, v in zip(vals, V.T):
        assert np.linalg.norm(M @ v - lam * v) <= 1e-8 * np.linalg.norm(M)


def test_topk_errors(rng):
    with pytest.raises(ValueError):
        sym_eigs_topk(rng.standard_normal((4, 4)), 2)
    with pytest.raises(ValueError):
        sym_eigs_topk(np.eye(3), 4)
    with pytest.raises(ValueError):
        sym_eigs_topk(np.eye(3), 0)


def test_embed_hand_examples():
    e = embed(0.5 * np.ones((2, 2)), 1)
    np.testing.assert_allclose(np.abs(e.X[:, 0]), [np.sqrt(0.5)] * 2)
    assert e.J.tolist() == [1.0]
    e = embed(-0.5 * np.ones((2, 2)), 1)
    assert e.J.tolist() == [-1.0]


def test_embed_exact_rank_graphon1(rng):
    W = gr.build_prob_matrix(gr.graphon1(), rng.random(400))
    e = embed(W, 4)
    assert e.signature == (4, 0)
    assert np.linalg.norm(e.gram() - W) <= 1e-8


def test_embed_positives_first_blocks_sorted(rng):
    M = random_symmetric(12, rng)
    e = embed(M, 6)
    assert np.all(e.J[: e.d_pos] == 1) and np.all(e.J[e.d_pos:] == -1)
    mags = np.abs(e.eigenvalues)
    assert np.all(np.diff(mags[: e.d_pos]) <= 0) and np.all(np.diff(mags[e.d_pos:]) <= 0)
    G = e.X.T @ e.X
    np.testing.assert_allclose(G - np.diag(np.diag(G)), 0, atol=1e-10)
    assert e.bound == pytest.approx(np.max(np.linalg.norm(e.X, axis=1)))


@given(n=st.integers(3, 20), seed=st.integers(0, 2**32 - 1), data=st.data())
@settings(max_examples=40, deadline=None)
def test_truncation_matches_full_decomposition_oracle(n, seed, data):
    d = data.draw(st.integers(1, n))
    rng = np.random.default_rng(seed)
    A = random_symmetric(n, rng)
    e = embed(A, d)
    # Eckart-Young for symmetric matrices: drop the n - d smallest |eigenvalues|
    mags = np.sort(np.abs(np.linalg.eigvalsh(A)))
    best = np.sqrt(np.sum(mags[: n - d] ** 2))
    assert np.linalg.norm(e.gram() - A) == pytest.approx(best, rel=1e-8, abs=1e-10)


def test_zero_eigenvalues_dropped(caplog):
    A = np.zeros((3, 3))
    A[0, 0] = 2.0
    with caplog.at_level(logging.WARNING, logger="lrgm.spectral"):
        e = embed(A, 2)
    assert e.d == 1 and "numerically zero" in caplog.text
    with pytest.raises(SignatureError):
        embed(np.zeros((3, 3)), 1)


def test_embed_invalid(rng):
    with pytest.raises(ValueError):
        embed(np.eye(3), 0)
    with pytest.raises(ValueError):
        embed(rng.standard_normal((3, 3)), 1)


def test_permutation_equivariance(rng):
    n = 120
    W = gr.build_prob_matrix(gr.graphon1(), rng.random(n))
    perm = rng.permutation(n)
    e1 = embed(W, 4)
    e2 = embed(gr.apply_permutation(W, perm), 4)
    assert e1.signature == e2.signature
    # row perm[i] of the relabelled embedding belongs to node i
    X2 = e2.X[perm]
    s12 = np.linalg.svd(e1.X.T @ X2, compute_uv=False)
    s11 = np.linalg.svd(e1.X.T @ e1.X, compute_uv=False)
    np.testing.assert_allclose(s12, s11, atol=1e-6)
    U, _, Vt = np.linalg.svd(e1.X.T @ X2)
    np.testing.assert_allclose(e1.X @ U @ Vt, X2, atol=1e-8)


def test_signature_invariant_to_relabelling(rng):
    A = gr.sample_adjacency(gr.build_prob_matrix(gr.graphon2(), rng.random(150)), rng, 0.3)
    perm = rng.permutation(150)
    assert embed(A, 3).signature == embed(gr.apply_permutation(A, perm), 3).signature


def test_forced_signature(rng):
    W = gr.build_prob_matrix(gr.graphon2(), rng.random(200))
    e = embed(W, 3, signature=(2, 1))
    assert e.J.tolist() == [1, 1, -1]
    with pytest.raises(ValueError):
        embed(W, 3, signature=(1, 1))
    with pytest.raises(SignatureError):
        embed(np.eye(4), 2, signature=(1, 1))
