import itertools

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def brute_force_assignment(C: np.ndarray) -> float:
    n = C.shape[0]
    rows = np.arange(n)
    return min(C[rows, list(p)].sum() for p in itertools.permutations(range(n)))


def parabola_cloud(n: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(n)
    return np.column_stack([u, u**2])
