import struct

import numpy as np
import pytest

from lrgm import io
from lrgm.laplace import LossConfig, sample_frequencies
from lrgm.spectral import embed


@pytest.mark.parametrize("name", ["m.csv", "m.bin"])
@pytest.mark.parametrize("shape", [(4, 4), (5, 2), (1, 1)])
def test_matrix_roundtrip(tmp_path, rng, name, shape):
    M = rng.standard_normal(shape)
    io.write_matrix(tmp_path / name, M)
    np.testing.assert_array_equal(io.read_matrix(tmp_path / name), M)


def test_binary_header(tmp_path):
    M = np.arange(9.0).reshape(3, 3)
    path = tmp_path / "a.bin"
    io.write_matrix(path, M)
    data = path.read_bytes()
    assert data[:4] == b"LRGM"
    assert struct.unpack("<II", data[4:12]) == (3, 0)
    assert len(data) == 12 + 9 * 8
    assert struct.unpack("<d", data[12 + 8:12 + 16])[0] == 1.0


def test_binary_rectangular_header(tmp_path):
    path = tmp_path / "r.bin"
    io.write_matrix(path, np.ones((2, 5)))
    data = path.read_bytes()
    assert struct.unpack("<III", data[4:16]) == (2, io.FLAG_RECTANGULAR, 5)


def test_binary_corruption(tmp_path):
    path = tmp_path / "bad.bin"
    io.write_matrix(path, np.eye(3))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(io.FormatError):
        io.read_matrix(path)
    path.write_bytes(b"XXXX" + b"\0" * 8)
    with pytest.raises(io.FormatError):
        io.read_matrix(path)
    path.write_bytes(b"LR")
    with pytest.raises(io.FormatError):
        io.read_matrix(path)


def test_read_symmetric(tmp_path, rng):
    path = tmp_path / "a.csv"
    io.write_matrix(path, rng.random((3, 3)))
    with pytest.raises(io.FormatError):
        io.read_symmetric(path)
    io.write_matrix(path, rng.random((2, 3)))
    with pytest.raises(io.FormatError):
        io.read_symmetric(path)
    S = rng.random((3, 3))
    io.write_matrix(path, S + S.T)
    np.testing.assert_array_equal(io.read_symmetric(path), S + S.T)


def test_bad_csv(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("1,2\n3,abc\n")
    with pytest.raises(io.FormatError):
        io.read_matrix(path)


def test_vectors(tmp_path, rng):
    perm = rng.permutation(10)
    io.write_vector(tmp_path / "p.csv", perm, integer=True)
    np.testing.assert_array_equal(io.read_vector(tmp_path / "p.csv", integer=True), perm)
    u = rng.random(7)
    io.write_vector(tmp_path / "u.csv", u)
    np.testing.assert_array_equal(io.read_vector(tmp_path / "u.csv"), u)


def test_embedding_roundtrip(tmp_path, rng):
    A = rng.standard_normal((8, 8))
    e = embed(A + A.T, 3)
    sidecar = io.write_embedding(tmp_path / "emb.bin", e)
    assert sidecar.name == "emb.bin.json"
    back = io.read_embedding(tmp_path / "emb.bin")
    np.testing.assert_array_equal(back.X, e.X)
    np.testing.assert_array_equal(back.J, e.J)
    assert back.signature == e.signature


def test_frequency_roundtrip(tmp_path, rng):
    F = sample_frequencies(LossConfig(m_s=20, gamma=0.7), 2, rng)
    io.write_frequencies(tmp_path / "f.csv", F)
    back = io.read_frequencies(tmp_path / "f.csv")
    np.testing.assert_array_equal(back.T, F.T)
    assert back.gamma == 0.7
