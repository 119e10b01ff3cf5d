"""Point registration, graph matching, the ICP baseline and error metrics."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .assignment import Matching, assign_points, cost_matrix
from .graphon import apply_permutation
from .laplace import LossConfig, as_points
from .orthogonal import (
    BlockConstraint,
    OrthogonalTransform,
    from_matrix,
    full_transform,
    minimize_over_O,
)
from .spectral import Embedding, embed


class SignatureMismatch(RuntimeError):
    """The two embeddings disagree on their eigenvalue sign pattern."""

    def __init__(self, sig1, sig2):
        super().__init__(
            f"embedding sign signatures differ: graph 1 has (pos, neg) = {sig1}, "
            f"graph 2 has {sig2}; try a different d"
        )
        self.signatures = (sig1, sig2)


@dataclass
class MatchResult:
    """Estimated correspondence and transform.

    ``matching`` pairs rows of the first input with rows of the second;
    ``perm`` is its permutation form when both inputs have the same size.
    """

    matching: Matching
    transform: OrthogonalTransform
    loss: float
    method: str = "laplace"
    diagnostics: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    embeddings: tuple[Embedding, Embedding] | None = None

    @property
    def perm(self) -> np.ndarray | None:
        try:
            return self.matching.as_permutation()
        except ValueError:
            return None

    def to_dict(self) -> dict:
        perm = self.perm
        out = {
            "method": self.method,
            "loss": float(self.loss),
            "perm": None if perm is None else perm.tolist(),
            "rows": self.matching.rows.tolist(),
            "cols": self.matching.cols.tolist(),
            "transform": {
                "d": self.transform.d,
                "matrix": self.transform.matrix.ravel().tolist(),
                "signs": self.transform.signs.tolist(),
                "angles": self.transform.angles.tolist(),
            },
            "timings_ms": {k: 1000.0 * v for k, v in self.timings.items()},
            "diagnostics": self.diagnostics,
        }
        return out


def _matching_cost(XO, Y, m: Matching) -> float:
    diff = as_points(XO)[m.rows] - as_points(Y)[m.cols]
    return float(np.sum(diff * diff))


def register_points(
    X,
    Y,
    cfg: LossConfig | None = None,
    p: int = 4,
    rng: np.random.Generator | None = None,
    constraint: BlockConstraint | None = None,
    budget: int | None = None,
) -> MatchResult:
    """Estimate ``O`` by minimising the Laplace loss, then assign rows of ``X O`` to ``Y``."""
    cfg = cfg or LossConfig()
    rng = rng if rng is not None else np.random.default_rng()
    X, Y = as_points(X), as_points(Y)
    if X.shape[0] == 0 or Y.shape[0] == 0:
        raise ValueError("empty point cloud")
    if X.shape[1] != Y.shape[1]:
        raise ValueError("X and Y must have the same dimension")

    t0 = time.perf_counter()
    search = minimize_over_O(X, Y, cfg, p=p, constraint=constraint, rng=rng, budget=budget)
    t1 = time.perf_counter()
    XO = X @ search.transform.matrix
    matching = assign_points(XO, Y, rng)
    t2 = time.perf_counter()
    diagnostics = {
        "best_start": search.best_start,
        "start_losses": search.start_losses,
        "final_losses": search.final_losses,
        "loss_evaluations": search.nfev,
        "exhausted_starts": search.exhausted_starts,
        "assignment_cost": _matching_cost(XO, Y, matching),
    }
    return MatchResult(
        matching=matching,
        transform=search.transform,
        loss=search.loss,
        diagnostics=diagnostics,
        timings={"optimize": t1 - t0, "assign": t2 - t1},
    )


def embed_pair(A1, A2, d: int, signature: tuple[int, int] | None = None) -> tuple[Embedding, Embedding]:
    """Embed both graphs; raise :class:`SignatureMismatch` if their ``J`` differ."""
    e1 = embed(A1, d, signature)
    e2 = embed(A2, d, signature)
    if e1.signature != e2.signature:
        raise SignatureMismatch(e1.signature, e2.signature)
    return e1, e2


def block_constraint_for(e: Embedding) -> BlockConstraint | None:
    if e.d_pos and e.d_neg:
        return BlockConstraint(e.d_pos, e.d_neg)
    return None


def match_graphs(
    A1,
    A2,
    d: int,
    cfg: LossConfig | None = None,
    p: int = 4,
    rng: np.random.Generator | None = None,
    signature: tuple[int, int] | None = None,
    budget: int | None = None,
) -> MatchResult:
    """Match the nodes of two graphs through their spectral embeddings.

    The returned ``perm`` maps node ``i`` of ``A1`` to node ``perm[i]`` of
    ``A2``.  An indefinite sign pattern restricts ``O`` to be block-diagonal.
    """
    t0 = time.perf_counter()
    e1, e2 = embed_pair(A1, A2, d, signature)
    t1 = time.perf_counter()
    constraint = block_constraint_for(e1)
    result = register_points(e1.X, e2.X, cfg, p=p, rng=rng, constraint=constraint, budget=budget)
    result.timings = {"embed": t1 - t0, **result.timings}
    result.diagnostics["signature"] = list(e1.signature)
    result.diagnostics["block_constrained"] = constraint is not None
    result.embeddings = (e1, e2)
    return result


def procrustes(X_paired, Y_paired) -> OrthogonalTransform:
    """Orthogonal ``O`` minimising ``||X O - Y||_F`` for row-paired clouds.

    With ``X^T Y = U S V^T`` the minimiser is ``U V^T``.
    """
    X, Y = as_points(X_paired), as_points(Y_paired)
    if X.shape != Y.shape:
        raise ValueError("paired clouds must have the same shape")
    U, _, Vt = np.linalg.svd(X.T @ Y)
    return from_matrix(U @ Vt)


def icp_baseline(
    X,
    Y,
    max_iters: int = 100,
    rng: np.random.Generator | None = None,
    init: OrthogonalTransform | np.ndarray | None = None,
    tol: float = 1e-10,
) -> MatchResult:
    """Alternate optimal assignment and orthogonal Procrustes.

    The objective ``||X O - Y[matching]||_F^2`` never increases; its history
    is in ``diagnostics["objective"]``.
    """
    X, Y = as_points(X), as_points(Y)
    if X.shape != Y.shape:
        raise ValueError("ICP baseline needs equally sized clouds")
    d = X.shape[1]
    if init is None:
        O = full_transform(np.ones(d), np.zeros(d * (d - 1) // 2))
    elif isinstance(init, OrthogonalTransform):
        O = init
    else:
        O = from_matrix(init)
    t0 = time.perf_counter()
    history = []
    matching = None
    for it in range(max_iters):
        matching = assign_points(X @ O.matrix, Y, rng)
        O_new = procrustes(X[matching.rows], Y[matching.cols])
        obj = _matching_cost(X @ O_new.matrix, Y, matching)
        old = _matching_cost(X @ O.matrix, Y, matching)
        # rounding can make an exact Procrustes step look worse by ~1 ulp
        if obj <= old:
            O = O_new
        else:
            obj = old
        history.append(obj)
        if obj <= tol or (it > 0 and history[-2] - obj < tol):
            break
    return MatchResult(
        matching=matching,
        transform=O,
        loss=history[-1] / X.shape[0],
        method="icp",
        diagnostics={"objective": history, "iterations": len(history)},
        timings={"icp": time.perf_counter() - t0},
    )


def rmse_metric(W, perm_hat, perm_star) -> float:
    """``||P_hat W P_hat^T - P* W P*^T||_F / n`` (multiply by 100 for reports)."""
    W = np.asarray(W, dtype=float)
    perm_hat = np.asarray(perm_hat)
    perm_star = np.asarray(perm_star)
    n = W.shape[0]
    if perm_hat.shape != (n,) or perm_star.shape != (n,):
        raise ValueError("permutation sizes do not match W")
    diff = apply_permutation(W, perm_hat) - apply_permutation(W, perm_star)
    return float(np.linalg.norm(diff) / n)


def matching_error(W1, W2, perm_hat) -> float:
    """``||P_hat W1 P_hat^T - W2||_F / n``; equals the RMSE when ``W2 = P* W1 P*^T``."""
    W1 = np.asarray(W1, dtype=float)
    n = W1.shape[0]
    return float(np.linalg.norm(apply_permutation(W1, perm_hat) - np.asarray(W2)) / n)


def registration_error(X, Y, matching) -> float:
    """``min_O ||P_hat X O - Y||_F / sqrt(n)`` for an estimated matching.

    ``matching`` is a :class:`Matching` or a permutation with ``perm[i]`` the
    Y row paired with X row ``i``.
    """
    X, Y = as_points(X), as_points(Y)
    if not isinstance(matching, Matching):
        perm = np.asarray(matching)
        if perm.shape != (X.shape[0],) or X.shape[0] != Y.shape[0]:
            raise ValueError("permutation size does not match the clouds")
        matching = Matching(np.arange(perm.size), perm)
    Xp, Yp = X[matching.rows], Y[matching.cols]
    O = procrustes(Xp, Yp).matrix
    return float(np.linalg.norm(Xp @ O - Yp) / np.sqrt(Xp.shape[0]))


def assignment_total(XO, Y, matching: Matching) -> float:
    """Total squared-distance cost of a matching, recomputed from scratch."""
    return matching.total_cost(cost_matrix(XO, Y))
