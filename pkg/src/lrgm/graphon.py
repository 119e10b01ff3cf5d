"""Low-rank graphons, latent positions and random graph generation.

A graphon is a symmetric kernel ``f: [0,1]^2 -> R``.  Given latent positions
``u_1, ..., u_n`` the edge-probability matrix is ``W_ij = f(u_i, u_j)`` and an
observed graph is either a Bernoulli draw of ``W`` or ``W`` plus symmetric
Gaussian noise.

Three presets reproduce the benchmark graphons:

* ``graphon1()`` -- 4-block stochastic block model, within-block probability
  ``i/5`` for block ``i`` and ``0.3/5`` between blocks.
* ``graphon2()`` -- ``sin(5*pi*(x + y + 1))/2 + 1/2``.
* ``graphon3()`` -- eigen-system with values ``(0.167, 0.05, 0.05, 0.05)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]


class GraphonKind(str, Enum):
    SBM = "sbm"
    FORMULA = "formula"
    EIGEN = "eigen"


@dataclass(frozen=True)
class GraphonSpec:
    """A symmetric kernel on the unit square.

    Only the fields relevant to ``kind`` are used:

    * SBM: ``within_probs`` (length K) and ``between_prob``; block ``k``
      covers ``[k/K, (k+1)/K)``.
    * FORMULA: ``formula``, a vectorised ``f(x, y)``.
    * EIGEN: ``eigenvalues`` and matching ``eigenfunctions``; the kernel is
      ``sum_k lambda_k xi_k(x) xi_k(y)``.
    """

    kind: GraphonKind
    name: str = ""
    within_probs: tuple[float, ...] = ()
    between_prob: float = 0.0
    formula: Kernel | None = field(default=None, compare=False)
    eigenvalues: tuple[float, ...] = ()
    eigenfunctions: tuple[Callable[[np.ndarray], np.ndarray], ...] = field(
        default=(), compare=False
    )

    def __post_init__(self):
        if self.kind is GraphonKind.SBM and not self.within_probs:
            raise ValueError("SBM graphon needs at least one block")
        if self.kind is GraphonKind.FORMULA and self.formula is None:
            raise ValueError("formula graphon needs a kernel function")
        if self.kind is GraphonKind.EIGEN and (
            not self.eigenvalues or len(self.eigenvalues) != len(self.eigenfunctions)
        ):
            raise ValueError("eigen graphon needs matching eigenvalues/eigenfunctions")

    @property
    def n_blocks(self) -> int:
        return len(self.within_probs)

    def kernel(self, x, y) -> np.ndarray:
        """Vectorised, unclipped kernel evaluation with numpy broadcasting."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind is GraphonKind.SBM:
            K = self.n_blocks
            B = np.full((K, K), float(self.between_prob))
            np.fill_diagonal(B, self.within_probs)
            return B[_block_index(x, K), _block_index(y, K)]
        if self.kind is GraphonKind.FORMULA:
            return np.asarray(self.formula(x, y), dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for lam, xi in zip(self.eigenvalues, self.eigenfunctions):
            out = out + lam * (xi(x) * xi(y))
        return out


def _block_index(x: np.ndarray, K: int) -> np.ndarray:
    return np.minimum((x * K).astype(int), K - 1)


def sbm(within_probs: Sequence[float], between_prob: float, name: str = "sbm") -> GraphonSpec:
    return GraphonSpec(
        GraphonKind.SBM,
        name=name,
        within_probs=tuple(float(p) for p in within_probs),
        between_prob=float(between_prob),
    )


def erdos_renyi(p: float) -> GraphonSpec:
    p = float(p)
    return GraphonSpec(
        GraphonKind.FORMULA,
        name=f"er:{p:g}",
        formula=lambda x, y: np.full(np.broadcast(x, y).shape, p),
    )


def graphon1() -> GraphonSpec:
    return sbm([1 / 5, 2 / 5, 3 / 5, 4 / 5], 0.3 / 5, name="graphon1")


def _graphon2_kernel(x, y):
    return np.sin(5 * np.pi * (x + y + 1)) / 2 + 0.5


def graphon2() -> GraphonSpec:
    return GraphonSpec(GraphonKind.FORMULA, name="graphon2", formula=_graphon2_kernel)


def _xi_const(x):
    return np.ones_like(x)


def _xi_linear(x):
    return 2 * x - 1


def _xi_tent(x):
    return 1 - 4 * np.abs(x - 0.5)


def _xi_step(x):
    inside = ((x > 1 / 8) & (x < 3 / 8)) | ((x > 5 / 8) & (x < 7 / 8))
    return 2.0 * inside - 1.0


def graphon3() -> GraphonSpec:
    # eigenfunctions exactly as listed; not all have unit L2 norm
    return GraphonSpec(
        GraphonKind.EIGEN,
        name="graphon3",
        eigenvalues=(0.167, 0.05, 0.05, 0.05),
        eigenfunctions=(_xi_const, _xi_linear, _xi_tent, _xi_step),
    )


PRESETS: dict[str, Callable[[], GraphonSpec]] = {
    "graphon1": graphon1,
    "graphon2": graphon2,
    "graphon3": graphon3,
}


def get_graphon(name: str) -> GraphonSpec:
    """Look up a graphon by name.

    Besides the presets, ``er:<p>`` gives an Erdos-Renyi graphon and
    ``sbm:<p1>,<p2>,...;<q>`` a block model with within-block probabilities
    ``p_k`` and between-block probability ``q``.
    """
    key = name.strip().lower()
    if key in PRESETS:
        return PRESETS[key]()
    try:
        if key.startswith("er:"):
            return erdos_renyi(float(key[3:]))
        if key.startswith("sbm:"):
            within, between = key[4:].split(";")
            probs = [float(v) for v in within.split(",")]
            return sbm(probs, float(between), name=key)
    except ValueError as exc:
        raise KeyError(f"cannot parse graphon {name!r}: {exc}") from None
    raise KeyError(
        f"unknown graphon {name!r}; choose from {sorted(PRESETS)}, er:<p> or sbm:<p1>,...;<q>"
    )


def _check_unit_interval(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise ValueError(f"{what} must lie in [0, 1]")
    return arr


def eval_graphon(spec: GraphonSpec, x: float, y: float) -> float:
    """Evaluate ``f(x, y)`` at a single point of the unit square."""
    _check_unit_interval([x, y], "graphon arguments")
    return float(spec.kernel(np.float64(x), np.float64(y)))


def build_prob_matrix(spec: GraphonSpec, u) -> np.ndarray:
    """Edge-probability matrix ``W_ij = f(u_i, u_j)``, exactly symmetric."""
    u = _check_unit_interval(np.atleast_1d(u), "latent positions")
    F = spec.kernel(u[:, None], u[None, :])
    W = np.triu(F)
    W += np.triu(W, 1).T
    return W


def sample_latents(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random(n)


def sample_adjacency(W, rng: np.random.Generator, sigma: float | None = None) -> np.ndarray:
    """Draw a symmetric observation of ``W``.

    With ``sigma=None`` entries are Bernoulli(W_ij); otherwise ``W + E`` with
    ``E`` symmetric and N(0, sigma^2) on and above the diagonal.  Pairs
    ``i <= j`` are drawn independently, including the diagonal.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be a square matrix")
    n = W.shape[0]
    upper = np.triu(np.ones((n, n), dtype=bool))
    if sigma is None:
        if np.any(W < 0) or np.any(W > 1):
            logger.warning("edge probabilities outside [0, 1]; clipping")
            W = np.clip(W, 0.0, 1.0)
        A = (rng.random((n, n)) < W) & upper
        A = A.astype(float)
    else:
        if sigma < 0:
            raise ValueError("noise sigma must be non-negative")
        A = np.where(upper, W + sigma * rng.standard_normal((n, n)), 0.0)
    A += np.triu(A, 1).T
    return A


def sample_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random permutation; ``perm[i]`` is the image of index ``i``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return rng.permutation(n)


def apply_permutation(A, perm) -> np.ndarray:
    """Relabel nodes: returns ``B`` with ``B[perm[i], perm[j]] = A[i, j]``.

    This is ``P A P^T`` for the permutation matrix with ``P[perm[i], i] = 1``.
    """
    A = np.asarray(A)
    inv = invert_permutation(perm)
    return A[np.ix_(inv, inv)]


def invert_permutation(perm) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.intp)
    if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(perm.size)):
        raise ValueError("not a permutation")
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


def kernel_spectrum(spec: GraphonSpec, grid: int = 2000, k: int = 10) -> np.ndarray:
    """Leading eigenvalues of the integral operator, by midpoint discretisation.

    Returned in order of decreasing magnitude.
    """
    x = (np.arange(grid) + 0.5) / grid
    vals = np.linalg.eigvalsh(build_prob_matrix(spec, x) / grid)
    order = np.argsort(-np.abs(vals), kind="stable")
    return vals[order][:k]


def kernel_signature(spec: GraphonSpec, d: int, grid: int = 2000) -> tuple[int, int]:
    """Counts of positive and negative eigenvalues among the top ``d``.

    Numerically zero eigenvalues are not counted, so the two counts may sum
    to less than ``d`` when the kernel has rank below ``d``.
    """
    vals = kernel_spectrum(spec, grid=grid, k=d)
    vals = vals[np.abs(vals) > 1e-9 * np.abs(vals[0])]
    return int(np.sum(vals > 0)), int(np.sum(vals < 0))
