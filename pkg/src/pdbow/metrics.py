"""Exact metrics between birth-persistence diagrams.

Ground distance is L-infinity on the birth-persistence plane; the diagonal
of the classical birth-death plane is the persistence = 0 axis here, so the
axis projection of (b, p) is (b, 0) at cost p. Points of either diagram may
be matched to the axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .persistence import Diagram

__all__ = ["Matching", "wasserstein", "bottleneck", "wasserstein_oracle"]

#: marker index for an axis (persistence = 0) partner in a Matching
DIAG = -1


@dataclass(frozen=True)
class Matching:
    """Optimal assignment between two diagrams, axis partners marked DIAG."""

    assignment: list[tuple[int, int]]
    cost: float


def _linf(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise L-inf distances between rows of a (n,2) and b (m,2)."""
    return np.abs(a[:, None, :] - b[None, :, :]).max(axis=2)


def _cost_matrix(B: Diagram, B2: Diagram, q: float) -> np.ndarray:
    """Square (n+m) x (n+m) assignment costs with axis dummies on both sides."""
    n, m = len(B), len(B2)
    C = np.zeros((n + m, n + m))
    if n and m:
        C[:n, :m] = _linf(B.points, B2.points) ** q
    if n:
        C[:n, m:] = (B.persistences ** q)[:, None]
    if m:
        C[n:, :m] = (B2.persistences ** q)[None, :]
    return C


def wasserstein(
    B: Diagram, B2: Diagram, q: float = 1.0, return_matching: bool = False
):
    """q-Wasserstein distance between two diagrams, solved exactly.

    The square assignment problem augments each side with the other side's
    axis projections and is solved by the Hungarian algorithm. q >= 1.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    n, m = len(B), len(B2)
    if n + m == 0:
        return (0.0, Matching([], 0.0)) if return_matching else 0.0

    C = _cost_matrix(B, B2, q)
    rows, cols = linear_sum_assignment(C)
    total = float(C[rows, cols].sum())
    dist = total ** (1.0 / q)
    if not return_matching:
        return dist
    assignment = []
    for r, c in zip(rows, cols):
        left = int(r) if r < n else DIAG
        right = int(c) if c < m else DIAG
        if left == DIAG and right == DIAG:
            continue
        assignment.append((left, right))
    return dist, Matching(assignment, dist)


def _has_perfect_matching(adj: list[list[int]], n_left: int, n_right: int) -> bool:
    """Kuhn's augmenting-path test for a perfect matching of all left nodes."""
    match_right = [-1] * n_right

    def try_augment(u: int, seen: list[bool]) -> bool:
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                if match_right[v] == -1 or try_augment(match_right[v], seen):
                    match_right[v] = u
                    return True
        return False

    for u in range(n_left):
        if not try_augment(u, [False] * n_right):
            return False
    return True


def bottleneck(B: Diagram, B2: Diagram) -> float:
    """Bottleneck distance: min over matchings of the max per-pair L-inf cost.

    Binary search over the sorted candidate costs (the optimum is always one
    of them), each probe checked by a bipartite perfect-matching test.
    """
    n, m = len(B), len(B2)
    if n + m == 0:
        return 0.0

    cross = _linf(B.points, B2.points) if n and m else np.empty((n, m))
    candidates = np.unique(
        np.concatenate([cross.ravel(), B.persistences, B2.persistences, [0.0]])
    )

    def feasible(t: float) -> bool:
        # Left side: points of B then m dummies; right: points of B2 then n.
        adj: list[list[int]] = []
        for i in range(n):
            targets = list(np.nonzero(cross[i] <= t)[0])
            if B.persistences[i] <= t:
                targets += list(range(m, m + n))
            adj.append(targets)
        for k in range(m):
            targets = list(range(m, m + n))  # dummy-dummy always allowed
            if B2.persistences[k] <= t:
                targets.append(k)
            adj.append(targets)
        return _has_perfect_matching(adj, n + m, n + m)

    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(float(candidates[mid])):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def wasserstein_oracle(B: Diagram, B2: Diagram, q: float = 1.0) -> float:
    """Exhaustive minimum over all matchings, for tiny diagrams only.

    Every point of B maps to a distinct point of B2 or to the axis; leftover
    B2 points map to the axis. Exact reference for the Hungarian solver.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    n, m = len(B), len(B2)
    if n + m > 7:
        raise ValueError("oracle limited to |B| + |B2| <= 7")

    cross = _linf(B.points, B2.points) if n and m else np.empty((n, m))
    pers_b = B.persistences
    pers_b2 = B2.persistences

    best = math.inf

    def recurse(i: int, used: set[int], acc: float) -> None:
        nonlocal best
        if acc >= best:
            return
        if i == n:
            rest = acc + sum(pers_b2[k] ** q for k in range(m) if k not in used)
            best = min(best, rest)
            return
        recurse(i + 1, used, acc + pers_b[i] ** q)
        for k in range(m):
            if k not in used:
                recurse(i + 1, used | {k}, acc + cross[i, k] ** q)

    recurse(0, set(), 0.0)
    return best ** (1.0 / q)
