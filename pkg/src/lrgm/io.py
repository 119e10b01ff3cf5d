"""Reading and writing matrices, embeddings, frequency samples and match results.

Two matrix formats are supported, chosen by file suffix:

* ``.csv``: plain comma-separated rows, full ``repr`` precision.
* anything else: a small binary format, little-endian throughout::

      b"LRGM"  u32 n  u32 flags  [u32 ncols if flags & 1]  n*ncols f64, row-major

  Without flag bit 0 the matrix is square ``n x n``.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .laplace import FrequencySample
from .spectral import Embedding

MAGIC = b"LRGM"
FLAG_RECTANGULAR = 1
_HEADER = struct.Struct("<4sII")
_U32 = struct.Struct("<I")


class FormatError(ValueError):
    """A file exists but does not hold what it should."""


def _is_csv(path: Path) -> bool:
    return path.suffix.lower() in (".csv", ".txt")


def write_matrix(path, M) -> None:
    path = Path(path)
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise ValueError("only 2-D arrays can be written")
    if _is_csv(path):
        lines = [",".join(repr(float(v)) for v in row) for row in M]
        path.write_text("\n".join(lines) + "\n")
        return
    n, k = M.shape
    flags = 0 if n == k else FLAG_RECTANGULAR
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n, flags))
        if flags & FLAG_RECTANGULAR:
            fh.write(_U32.pack(k))
        fh.write(np.ascontiguousarray(M, dtype="<f8").tobytes())


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    if _is_csv(path):
        try:
            M = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
        return M
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, n, flags = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    offset = _HEADER.size
    k = n
    if flags & FLAG_RECTANGULAR:
        if len(data) < offset + _U32.size:
            raise FormatError(f"{path}: truncated header")
        (k,) = _U32.unpack_from(data, offset)
        offset += _U32.size
    expected = offset + 8 * n * k
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    return np.frombuffer(data, dtype="<f8", offset=offset).reshape(n, k).astype(float)


def read_symmetric(path, tol: float = 1e-10) -> np.ndarray:
    """Read a square matrix and check it is symmetric."""
    A = read_matrix(path)
    if A.shape[0] != A.shape[1]:
        raise FormatError(f"{path}: matrix is {A.shape[0]}x{A.shape[1]}, not square")
    if not np.all(np.isfinite(A)):
        raise FormatError(f"{path}: non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > tol * scale:
        raise FormatError(f"{path}: matrix is not symmetric")
    return A


def write_vector(path, v, integer: bool = False) -> None:
    """One value per line (permutations, latent positions)."""
    v = np.asarray(v).ravel()
    fmt = (lambda x: str(int(x))) if integer else (lambda x: repr(float(x)))
    Path(path).write_text("".join(fmt(x) + "\n" for x in v))


def read_vector(path, integer: bool = False) -> np.ndarray:
    text = Path(path).read_text().split()
    try:
        if integer:
            return np.array([int(x) for x in text], dtype=np.intp)
        return np.array([float(x) for x in text])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_embedding(path, emb: Embedding) -> Path:
    """Write ``X`` to ``path`` and the sign data to ``<path>.json``; returns the sidecar path."""
    path = Path(path)
    write_matrix(path, emb.X)
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps({
        "J": [int(j) for j in emb.J],
        "d_pos": emb.d_pos,
        "d_neg": emb.d_neg,
        "eigenvalues": [float(v) for v in emb.eigenvalues],
    }, indent=2) + "\n")
    return sidecar


def read_embedding(path) -> Embedding:
    path = Path(path)
    X = read_matrix(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    J = np.asarray(meta["J"], dtype=float)
    if J.size != X.shape[1] or meta["d_pos"] + meta["d_neg"] != J.size:
        raise FormatError(f"{path}: sidecar does not match the matrix")
    return Embedding(X=X, J=J, eigenvalues=np.asarray(meta["eigenvalues"], dtype=float))


def write_frequencies(path, freqs: FrequencySample) -> None:
    """CSV with a ``gamma`` comment line followed by the rows of ``T``."""
    rows = [",".join(repr(float(v)) for v in row) for row in freqs.T]
    Path(path).write_text(f"# gamma={freqs.gamma!r}\n" + "\n".join(rows) + "\n")


def read_frequencies(path) -> FrequencySample:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline().strip()
    if not first.startswith("# gamma="):
        raise FormatError(f"{path}: missing gamma header")
    gamma = float(first.split("=", 1)[1])
    T = np.loadtxt(path, delimiter=",", comments="#", dtype=float, ndmin=2)
    return FrequencySample(T=T, gamma=gamma)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
