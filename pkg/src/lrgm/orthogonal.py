"""Search over orthogonal matrices through Givens-rotation charts.

Two parameterisations are used:

* the start family ``G_{d-1}(theta_{d-1}) ... G_1(theta_1) G_0(u)``, where
  ``G_0 = diag(u, 1, ..., 1)`` and ``G_k`` rotates coordinates ``(0, k)``;
* the full chart ``G_{p_M}(a_M) ... G_{p_1}(a_1) diag(signs)`` over all
  ``d(d-1)/2`` coordinate pairs in lexicographic order, which reaches every
  orthogonal matrix.

With ``a_{(0,k)} = theta_k``, ``signs = (u, 1, ..., 1)`` and every other
angle zero the two coincide, so starts lift to the full chart unchanged.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .laplace import FrequencySample, LaplaceObjective, LossConfig, as_points, sample_frequencies

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
MAX_SIGN_ENUMERATION = 4


def givens(d: int, i: int, j: int, theta: float) -> np.ndarray:
    """Rotation in the ``(i, j)`` plane: ``G[j, i] = sin``, ``G[i, j] = -sin``."""
    G = np.eye(d)
    c, s = np.cos(theta), np.sin(theta)
    G[i, i] = G[j, j] = c
    G[j, i] = s
    G[i, j] = -s
    return G


def angle_pairs(d: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(d), 2))


@dataclass(frozen=True)
class BlockConstraint:
    """Keep ``O`` block-diagonal with blocks of size ``d_pos`` and ``d_neg``."""

    d_pos: int
    d_neg: int

    def __post_init__(self):
        if self.d_pos < 0 or self.d_neg < 0 or self.d_pos + self.d_neg < 1:
            raise ValueError("block sizes must be non-negative and not both zero")

    @property
    def d(self) -> int:
        return self.d_pos + self.d_neg

    def blocks(self) -> list[range]:
        out = [range(0, self.d_pos), range(self.d_pos, self.d)]
        return [b for b in out if len(b)]

    def allows(self, i: int, j: int) -> bool:
        return (i < self.d_pos) == (j < self.d_pos)


@dataclass(frozen=True)
class OrthogonalTransform:
    """An orthogonal matrix together with its full-chart parameters."""

    matrix: np.ndarray
    signs: np.ndarray
    angles: np.ndarray

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    def params(self) -> tuple[np.ndarray, np.ndarray]:
        return self.signs.copy(), np.mod(self.angles, TWO_PI)

    def orthogonality_error(self) -> float:
        d = self.d
        return float(np.max(np.abs(self.matrix.T @ self.matrix - np.eye(d))))


def full_transform(signs: Sequence[float], angles: Sequence[float]) -> OrthogonalTransform:
    """Orthogonal matrix from per-coordinate signs and one angle per pair."""
    signs = np.asarray(signs, dtype=float)
    angles = np.asarray(angles, dtype=float)
    d = signs.size
    pairs = angle_pairs(d)
    if angles.shape != (len(pairs),):
        raise ValueError(f"expected {len(pairs)} angles for d={d}, got {angles.size}")
    if not np.all(np.abs(signs) == 1):
        raise ValueError("signs must be +1 or -1")
    M = np.diag(signs)
    for (i, j), a in zip(pairs, angles):
        if a == 0.0:
            continue
        c, s = np.cos(a), np.sin(a)
        Mi, Mj = M[i].copy(), M[j].copy()
        M[i] = c * Mi - s * Mj
        M[j] = s * Mi + c * Mj
    return OrthogonalTransform(matrix=M, signs=signs.copy(), angles=angles.copy())


def from_matrix(O) -> OrthogonalTransform:
    """Full-chart parameters of an orthogonal matrix.

    Undoes the rotations in reverse chart order; each step zeroes the
    ``(i, j)`` entry of the remaining factor, leaving ``diag(signs)``.
    """
    O = np.array(O, dtype=float)
    d = O.shape[0]
    if O.shape != (d, d):
        raise ValueError("matrix must be square")
    pairs = angle_pairs(d)
    angles = np.zeros(len(pairs))
    M = O.copy()
    for k in range(len(pairs) - 1, -1, -1):
        i, j = pairs[k]
        a = np.arctan2(-M[i, j], M[j, j])
        c, s = np.cos(a), np.sin(a)
        Mi, Mj = M[i].copy(), M[j].copy()
        M[i] = c * Mi + s * Mj
        M[j] = -s * Mi + c * Mj
        angles[k] = a
    signs = np.where(np.diag(M) < 0, -1.0, 1.0)
    return OrthogonalTransform(matrix=O, signs=signs, angles=np.mod(angles, TWO_PI))


def star_init(u: float, thetas: Sequence[float]) -> OrthogonalTransform:
    """Start-family matrix ``G_{d-1}(theta_{d-1}) ... G_1(theta_1) G_0(u)``.

    ``G_0 = diag(u, 1, ..., 1)`` and ``G_k`` rotates the plane of axes 0 and
    ``k``, so the rotation planes form a star around the first axis.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    d = thetas.size + 1
    if u not in (1, -1):
        raise ValueError("u must be +1 or -1")
    O = np.eye(d)
    O[0, 0] = u
    for k, theta in enumerate(thetas, start=1):
        O = givens(d, 0, k, theta) @ O
    signs = np.ones(d)
    signs[0] = u
    angles = np.zeros(d * (d - 1) // 2)
    angles[: d - 1] = thetas  # pairs (0, k) come first lexicographically
    return OrthogonalTransform(matrix=O, signs=signs, angles=angles)


def _block_grid(size: int, p: int) -> list[tuple[float, tuple[float, ...]]]:
    fracs = [TWO_PI * j / p for j in range(p)]
    return [
        (u, thetas)
        for u in (1.0, -1.0)
        for thetas in itertools.product(fracs, repeat=size - 1)
    ]


def init_grid(d: int, p: int = 4, constraint: BlockConstraint | None = None) -> list[OrthogonalTransform]:
    """Multistart grid ``{+-1} x {0, 2pi/p, ..., 2pi(p-1)/p}^(d-1)``.

    Gives ``2 p^(d-1)`` starts.  Under a block constraint each block gets its
    own grid of that form and the starts are their Cartesian product.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if d < 1:
        raise ValueError("d must be >= 1")
    if constraint is None:
        return [star_init(u, thetas) for u, thetas in _block_grid(d, p)]
    if constraint.d != d:
        raise ValueError("constraint does not match dimension")
    pairs = angle_pairs(d)
    blocks = constraint.blocks()
    out = []
    for combo in itertools.product(*[_block_grid(len(b), p) for b in blocks]):
        signs = np.ones(d)
        angles = np.zeros(len(pairs))
        for block, (u, thetas) in zip(blocks, combo):
            first = block[0]
            signs[first] = u
            for k, theta in zip(block[1:], thetas):
                angles[pairs.index((first, k))] = theta
        out.append(full_transform(signs, angles))
    return out


def _sign_candidates(d: int, constraint: BlockConstraint | None) -> list[np.ndarray]:
    if d <= MAX_SIGN_ENUMERATION:
        return [np.array(s, dtype=float) for s in itertools.product((1.0, -1.0), repeat=d)]
    cands = [np.ones(d)]
    for k in range(d):
        s = np.ones(d)
        s[k] = -1.0
        cands.append(s)
    blocks = constraint.blocks() if constraint is not None else [range(d)]
    for block in blocks:
        s = np.ones(d)
        s[list(block)] = -1.0
        cands.append(s)
    return cands


@dataclass
class RefineResult:
    transform: OrthogonalTransform
    loss: float
    start_loss: float
    nfev: int
    exhausted: bool


def refine(
    objective: Callable[[np.ndarray], float],
    start: OrthogonalTransform,
    constraint: BlockConstraint | None = None,
    budget: int | None = None,
    step: float = 0.4,
    xatol: float = 1e-2,
    fatol: float = 1e-4,
    max_rounds: int = 3,
) -> RefineResult:
    """Local descent from ``start`` on the full chart.

    Alternates Nelder-Mead over the free angles (signs held fixed) with a
    discrete pass over sign patterns at the current angles, until a sign pass
    stops improving or ``max_rounds`` is reached.  Under a block constraint
    angles that couple the two blocks stay at zero.  The returned loss never
    exceeds the loss at ``start``; ``exhausted`` reports a spent budget.
    """
    d = start.d
    pairs = angle_pairs(d)
    free = np.array(
        [k for k, (i, j) in enumerate(pairs) if constraint is None or constraint.allows(i, j)],
        dtype=int,
    )
    if budget is None:
        budget = max(200 * len(pairs), 50)
    angles = start.angles.copy()
    if constraint is not None:
        frozen = np.setdiff1d(np.arange(len(pairs)), free)
        angles[frozen] = 0.0
    signs = start.signs.copy()
    nfev = 0

    def loss_at(sg, ang):
        nonlocal nfev
        nfev += 1
        return float(objective(full_transform(sg, ang).matrix))

    best = loss_at(signs, angles)
    start_loss = best
    exhausted = False
    for _ in range(max_rounds):
        remaining = budget - nfev
        if free.size and remaining > free.size + 1:
            x0 = angles[free]
            simplex = np.vstack([x0, x0 + step * np.eye(free.size)])

            def f(x, _signs=signs):
                a = angles.copy()
                a[free] = x
                return loss_at(_signs, a)

            res = minimize(
                f,
                x0,
                method="Nelder-Mead",
                options={
                    "initial_simplex": simplex,
                    "maxfev": remaining,
                    "xatol": xatol,
                    "fatol": fatol,
                },
            )
            if res.fun < best:
                best = float(res.fun)
                angles[free] = res.x
            if res.status == 1 or budget - nfev <= 0:
                exhausted = True
                break
        elif free.size:
            exhausted = True
            break

        improved = False
        for cand in _sign_candidates(d, constraint):
            if np.array_equal(cand, signs):
                continue
            val = loss_at(cand, angles)
            if val < best:
                best, signs, improved = val, cand, True
        if not improved or not free.size:
            break

    O = full_transform(signs, angles)
    return RefineResult(transform=O, loss=best, start_loss=start_loss, nfev=nfev, exhausted=exhausted)


@dataclass
class SearchResult:
    """Outcome of the multistart search; per-start values feed reports."""

    transform: OrthogonalTransform
    loss: float
    best_start: int
    start_losses: list[float] = field(default_factory=list)
    final_losses: list[float] = field(default_factory=list)
    nfev: int = 0
    exhausted_starts: int = 0
    frequencies: FrequencySample | None = None


def minimize_over_O(
    X,
    Y,
    cfg: LossConfig,
    p: int = 4,
    constraint: BlockConstraint | None = None,
    rng: np.random.Generator | None = None,
    budget: int | None = None,
    freqs: FrequencySample | None = None,
    polish: bool = True,
    **refine_kw,
) -> SearchResult:
    """Minimise the sampled loss over ``O`` from every grid start.

    One frequency sample is drawn and held fixed for all evaluations.  Every
    start is refined to a coarse tolerance; with ``polish`` the winner is
    then refined again to ``xatol=1e-9``.  Ties between starts go to the
    lowest start index.
    """
    X, Y = as_points(X), as_points(Y)
    d = X.shape[1]
    if freqs is None:
        if rng is None:
            raise ValueError("need either rng or a frequency sample")
        freqs = sample_frequencies(cfg, d, rng)
    objective = LaplaceObjective(X, Y, freqs, cfg)
    best = None
    best_idx = -1
    start_losses, final_losses = [], []
    exhausted = 0
    for idx, start in enumerate(init_grid(d, p, constraint)):
        r = refine(objective, start, constraint=constraint, budget=budget, **refine_kw)
        start_losses.append(r.start_loss)
        final_losses.append(r.loss)
        exhausted += r.exhausted
        if best is None or r.loss < best.loss:
            best, best_idx = r, idx
    if polish:
        tight = {**refine_kw, "xatol": 1e-9, "fatol": 1e-13}
        r = refine(objective, best.transform, constraint=constraint, budget=budget, **tight)
        if r.loss < best.loss:
            best = r
    logger.debug("search: best start %d loss %.3g, %d evaluations", best_idx, best.loss, objective.nfev)
    return SearchResult(
        transform=best.transform,
        loss=best.loss,
        best_start=best_idx,
        start_losses=start_losses,
        final_losses=final_losses,
        nfev=objective.nfev,
        exhausted_starts=exhausted,
        frequencies=freqs,
    )
