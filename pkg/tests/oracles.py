"""Independent reference implementations used only by the tests.

Everything here is deliberately brute force and shares no code with the
package's algorithms: GF(2) ranks by dense elimination, Betti numbers from
the rank formula, exhaustive matching enumeration, exhaustive k-means.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from pdbow.persistence import BirthDeathDiagram, SimplicialFiltration


def gf2_rank(matrix: np.ndarray) -> int:
    """Rank over Z/2 by dense Gaussian elimination."""
    m = (np.asarray(matrix) % 2).astype(np.uint8).copy()
    rank = 0
    n_rows, n_cols = m.shape
    row = 0
    for col in range(n_cols):
        pivots = np.nonzero(m[row:, col])[0]
        if len(pivots) == 0:
            continue
        p = row + pivots[0]
        m[[row, p]] = m[[p, row]]
        for r in range(n_rows):
            if r != row and m[r, col]:
                m[r] ^= m[row]
        row += 1
        rank += 1
        if row == n_rows:
            break
    return rank


def boundary_matrix(filtration: SimplicialFiltration, d: int, upto: int) -> np.ndarray:
    """Dense Z/2 boundary matrix of the d-cells among the first ``upto`` cells."""
    simps = filtration.simplices[:upto]
    index = {verts: i for i, (verts, _, _) in enumerate(simps)}
    rows = [i for i, (_, _, dd) in enumerate(simps) if dd == d - 1]
    cols = [i for i, (_, _, dd) in enumerate(simps) if dd == d]
    row_pos = {i: k for k, i in enumerate(rows)}
    mat = np.zeros((len(rows), len(cols)), dtype=np.uint8)
    for k, j in enumerate(cols):
        verts = simps[j][0]
        for drop in range(len(verts)):
            face = verts[:drop] + verts[drop + 1 :]
            mat[row_pos[index[face]], k] = 1
    return mat


def betti_numbers_at_prefix(filtration: SimplicialFiltration, upto: int) -> list[int]:
    """Betti numbers of the complex formed by the first ``upto`` cells.

    beta_d = #d-cells - rank(boundary_d) - rank(boundary_{d+1}).
    """
    simps = filtration.simplices[:upto]
    max_dim = max((d for _, _, d in simps), default=0)
    counts = [sum(1 for _, _, d in simps if d == q) for q in range(max_dim + 1)]
    ranks = [gf2_rank(boundary_matrix(filtration, q, upto)) for q in range(1, max_dim + 2)]
    return [counts[q] - ranks[q] - (ranks[q - 1] if q > 0 else 0)
            for q in range(max_dim + 1)]


def betti_from_diagrams(diagrams: list[BirthDeathDiagram], q: int, t: float) -> int:
    """Betti_q of the sublevel complex at value t, per the diagrams."""
    for bd in diagrams:
        if bd.homology_dim == q:
            return sum(1 for b, d in bd.pairs if b <= t < d)
    return 0


def random_monotone_filtration(
    rng: np.random.Generator, n_vertices: int = 6,
    p_edge: float = 0.7, p_triangle: float = 0.7,
) -> SimplicialFiltration:
    """Random simplicial filtration: faces always present, values monotone."""
    value = {}
    for v in range(n_vertices):
        value[(v,)] = round(float(rng.uniform(0, 1)), 3)
    for i, j in itertools.combinations(range(n_vertices), 2):
        if rng.uniform() < p_edge:
            own = round(float(rng.uniform(0, 1)), 3)
            value[(i, j)] = max(own, value[(i,)], value[(j,)])
    for i, j, k in itertools.combinations(range(n_vertices), 3):
        if (i, j) in value and (i, k) in value and (j, k) in value:
            if rng.uniform() < p_triangle:
                own = round(float(rng.uniform(0, 1)), 3)
                value[(i, j, k)] = max(own, value[(i, j)], value[(i, k)], value[(j, k)])
    simplices = sorted(
        ((verts, val, len(verts) - 1) for verts, val in value.items()),
        key=lambda s: (s[1], s[2], s[0]),
    )
    return SimplicialFiltration.from_simplices(simplices)


def wasserstein_exhaustive(points_a, points_b, q: float = 1.0) -> float:
    """Minimum matching cost over every injective assignment, by enumeration.

    Written independently of pdbow.metrics.wasserstein_oracle: iterates over
    all subsets of A matched to all ordered arrangements of B.
    """
    A = [tuple(p) for p in points_a]
    B = [tuple(p) for p in points_b]

    def linf(x, y):
        return max(abs(x[0] - y[0]), abs(x[1] - y[1]))

    best = math.inf
    n = len(A)
    for r in range(0, min(n, len(B)) + 1):
        for subset in itertools.combinations(range(n), r):
            for arrangement in itertools.permutations(range(len(B)), r):
                cost = 0.0
                for i, j in zip(subset, arrangement):
                    cost += linf(A[i], B[j]) ** q
                for i in range(n):
                    if i not in subset:
                        cost += A[i][1] ** q
                used = set(arrangement)
                for j in range(len(B)):
                    if j not in used:
                        cost += B[j][1] ** q
                best = min(best, cost)
    return best ** (1.0 / q) if best > 0 else 0.0


def best_two_means(points: np.ndarray) -> float:
    """Optimal 2-means objective by exhausting all 2-partitions."""
    pts = np.asarray(points)
    n = len(pts)
    best = math.inf
    for bits in range(1, 2 ** (n - 1)):
        mask = np.array([(bits >> i) & 1 for i in range(n)], dtype=bool)
        if not mask.any() or mask.all():
            continue
        cost = 0.0
        for side in (mask, ~mask):
            grp = pts[side]
            cost += ((grp - grp.mean(axis=0)) ** 2).sum()
        best = min(best, cost)
    return best
