"""Filtrations and persistent homology at desk scale.

Point clouds become Vietoris-Rips filtrations, grayscale images become
lower-star cubical filtrations, and both feed a standard boundary-matrix
column reduction over Z/2 (left-to-right, with the clearing twist: higher
dimensions first, so columns of already-paired births are skipped).
Birth-death output is converted to the birth-persistence plane used
everywhere downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ._reduction import reduce_dimension

__all__ = [
    "PointCloud",
    "SimplicialFiltration",
    "CubicalFiltration",
    "BirthDeathDiagram",
    "Diagram",
    "build_rips_filtration",
    "build_cubical_filtration",
    "compute_persistence",
    "to_birth_persistence",
]


@dataclass(frozen=True)
class PointCloud:
    """Finite set of 2-d or 3-d points, unit-free.

    Attributes
    ----------
    points : ndarray, shape (n, d)
        One point per row, d in {2, 3}.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("point cloud must be a non-empty (n, d) array")
        if pts.shape[1] not in (2, 3):
            raise ValueError(f"points must be 2-d or 3-d, got d={pts.shape[1]}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def max_distance(self) -> float:
        """Largest pairwise distance; the default Rips radius."""
        if len(self) == 1:
            return 0.0
        return float(pdist(self.points).max())


@dataclass(frozen=True)
class SimplicialFiltration:
    """Ordered simplicial complex with filtration values.

    Stored as parallel arrays: ``vertex_array`` holds each simplex's sorted
    vertex ids (-1 padding), ``filtration_values`` and ``dimensions`` follow
    the same order. The order satisfies: faces before cofaces, values
    non-decreasing, and at equal value lower dimension first, then
    lexicographic vertex order. The ``simplices`` view materializes the
    (vertices, value, dim) tuples on demand.
    """

    vertex_array: np.ndarray
    filtration_values: np.ndarray
    dimensions: np.ndarray

    def __post_init__(self):
        va = np.asarray(self.vertex_array, dtype=np.int64)
        if va.ndim != 2:
            raise ValueError("vertex_array must be (n_simplices, width)")
        vals = np.asarray(self.filtration_values, dtype=np.float64)
        dims = np.asarray(self.dimensions, dtype=np.int64)
        if not (len(va) == len(vals) == len(dims)):
            raise ValueError("parallel arrays must have equal lengths")
        if np.any(np.diff(vals) < 0):
            raise ValueError("filtration values must be non-decreasing")
        same = np.diff(vals) == 0
        if np.any(same & (np.diff(dims) < 0)):
            raise ValueError("equal-value simplices must be ordered by dimension")
        if np.any((va >= 0).sum(axis=1) - 1 != dims):
            raise ValueError("dimension tags must match vertex counts")
        object.__setattr__(self, "vertex_array", va)
        object.__setattr__(self, "filtration_values", vals)
        object.__setattr__(self, "dimensions", dims)

    @classmethod
    def from_simplices(
        cls, simplices: list[tuple[tuple[int, ...], float, int]]
    ) -> "SimplicialFiltration":
        width = max((len(v) for v, _, _ in simplices), default=1)
        va = np.full((len(simplices), width), -1, dtype=np.int64)
        for i, (verts, _, _) in enumerate(simplices):
            va[i, : len(verts)] = sorted(verts)
        return cls(
            vertex_array=va,
            filtration_values=np.array([f for _, f, _ in simplices]),
            dimensions=np.array([d for _, _, d in simplices]),
        )

    @cached_property
    def simplices(self) -> list[tuple[tuple[int, ...], float, int]]:
        return [
            (tuple(int(x) for x in row if x >= 0), float(f), int(d))
            for row, f, d in zip(
                self.vertex_array, self.filtration_values, self.dimensions
            )
        ]

    def __len__(self) -> int:
        return len(self.vertex_array)

    @property
    def values(self) -> np.ndarray:
        return self.filtration_values

    @property
    def dims(self) -> np.ndarray:
        return self.dimensions

    @property
    def max_dim(self) -> int:
        return int(self.dimensions.max()) if len(self) else 0

    def facet_csr(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-dimension boundary structure for the reduction.

        Entry d-1 covers the dimension-d cells, in filtration order: a flat
        array of facet ranks (rank = position among the (d-1)-cells) plus
        CSR offsets. Raises if a facet is missing from the filtration.
        """
        va, dims = self.vertex_array, self.dimensions
        if self.max_dim > 2:
            return self._facet_csr_generic()
        out = []
        v_cells = np.nonzero(dims == 0)[0]
        n_ids = int(va.max()) + 1
        id2vrank = np.full(n_ids, -1, dtype=np.int64)
        id2vrank[va[v_cells, 0]] = np.arange(len(v_cells))

        e_cells = np.nonzero(dims == 1)[0]
        if self.max_dim >= 1:
            ef = np.stack(
                [id2vrank[va[e_cells, 0]], id2vrank[va[e_cells, 1]]], axis=1
            )
            if np.any(ef < 0):
                raise ValueError("edge with missing vertex in filtration")
            ef.sort(axis=1)
            out.append((ef.ravel(), 2 * np.arange(len(e_cells) + 1)))

        if self.max_dim == 2:
            t_cells = np.nonzero(dims == 2)[0]
            erank = np.full((n_ids, n_ids), -1, dtype=np.int64)
            erank[va[e_cells, 0], va[e_cells, 1]] = np.arange(len(e_cells))
            tf = np.stack(
                [
                    erank[va[t_cells, 0], va[t_cells, 1]],
                    erank[va[t_cells, 0], va[t_cells, 2]],
                    erank[va[t_cells, 1], va[t_cells, 2]],
                ],
                axis=1,
            )
            if np.any(tf < 0):
                raise ValueError("triangle with missing edge in filtration")
            tf.sort(axis=1)
            out.append((tf.ravel(), 3 * np.arange(len(t_cells) + 1)))
        return out

    def _facet_csr_generic(self) -> list[tuple[np.ndarray, np.ndarray]]:
        index: dict[tuple[int, ...], int] = {}
        rank_in_dim = np.empty(len(self), dtype=np.int64)
        counts = [0] * (self.max_dim + 1)
        for i, (verts, _, d) in enumerate(self.simplices):
            index[verts] = i
            rank_in_dim[i] = counts[d]
            counts[d] += 1
        out = []
        for d in range(1, self.max_dim + 1):
            faces, offsets = [], [0]
            for verts, _, dd in self.simplices:
                if dd != d:
                    continue
                for drop in range(len(verts)):
                    face = verts[:drop] + verts[drop + 1 :]
                    if face not in index:
                        raise ValueError(f"face {face} of {verts} missing")
                    faces.append(rank_in_dim[index[face]])
                offsets.append(len(faces))
            out.append((np.sort(np.array(faces).reshape(-1, d + 1), axis=1).ravel(),
                        np.array(offsets)))
        return out

    def boundaries(self) -> list[list[int]]:
        """Facet indices (into the filtration order) of each simplex."""
        cells_by_dim = [np.nonzero(self.dimensions == d)[0]
                        for d in range(self.max_dim + 1)]
        out: list[list[int]] = [[] for _ in range(len(self))]
        for d, (faces, offsets) in enumerate(self.facet_csr(), start=1):
            facet_cells = cells_by_dim[d - 1]
            for k, cell in enumerate(cells_by_dim[d]):
                ranks = faces[offsets[k] : offsets[k + 1]]
                out[cell] = [int(facet_cells[r]) for r in ranks]
        return out

    def validate(self) -> None:
        """Full invariant check: every face present and earlier in the order."""
        for j, faces in enumerate(self.boundaries()):
            for i in faces:
                if i >= j:
                    raise ValueError("face must precede coface in filtration order")


@dataclass(frozen=True)
class CubicalFiltration:
    """Lower-star filtration of the full cubical complex of a 2-d grid.

    Cells live on the doubled grid of shape (2*rows+1, 2*cols+1): both
    coordinates odd = pixel (2-cell), one odd = edge, both even = vertex.
    ``cells`` lists ``(cell_id, dim, value)`` in filtration order, where
    cell_id = a * (2*cols+1) + b for doubled coordinates (a, b).
    """

    rows: int
    cols: int
    cells: list[tuple[int, int, float]]

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def values(self) -> np.ndarray:
        return np.array([f for _, _, f in self.cells], dtype=np.float64)

    @property
    def dims(self) -> np.ndarray:
        return np.array([d for _, d, _ in self.cells], dtype=np.int64)

    @property
    def max_dim(self) -> int:
        return 2

    def boundaries(self) -> list[list[int]]:
        width = 2 * self.cols + 1
        position = {cid: i for i, (cid, _, _) in enumerate(self.cells)}
        out: list[list[int]] = []
        for cid, d, _ in self.cells:
            a, b = divmod(cid, width)
            faces = []
            if a % 2 == 1:
                faces += [position[(a - 1) * width + b], position[(a + 1) * width + b]]
            if b % 2 == 1:
                faces += [position[a * width + b - 1], position[a * width + b + 1]]
            out.append(faces)
        return out

    def facet_csr(self) -> list[tuple[np.ndarray, np.ndarray]]:
        dims = self.dims
        rank_in_dim = np.empty(len(self), dtype=np.int64)
        for d in range(3):
            sel = dims == d
            rank_in_dim[sel] = np.arange(int(sel.sum()))
        bd = self.boundaries()
        out = []
        for d in (1, 2):
            faces, offsets = [], [0]
            for cell in np.nonzero(dims == d)[0]:
                faces.extend(sorted(rank_in_dim[f] for f in bd[cell]))
                offsets.append(len(faces))
            out.append((np.array(faces, dtype=np.int64), np.array(offsets)))
        return out


@dataclass(frozen=True)
class BirthDeathDiagram:
    """Multiset of (birth, death) pairs for one homology dimension.

    Deaths may be ``math.inf`` for essential classes; death >= birth always.
    """

    pairs: list[tuple[float, float]]
    homology_dim: int

    def __post_init__(self):
        for b, d in self.pairs:
            if d < b:
                raise ValueError(f"death {d} before birth {b}")

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class Diagram:
    """Finite multiset of birth-persistence points for one homology dimension.

    The universal currency of the pipeline: every point has persistence > 0,
    infinite intervals have already been removed.
    """

    points: np.ndarray
    homology_dim: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValueError("diagram points must be finite")
        if pts.shape[0] and np.any(pts[:, 1] <= 0):
            raise ValueError("all persistences must be > 0")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def births(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def persistences(self) -> np.ndarray:
        return self.points[:, 1]


def build_rips_filtration(
    cloud: PointCloud, max_radius: float | None = None, max_dim: int = 1
) -> SimplicialFiltration:
    """Vietoris-Rips filtration of a point cloud.

    Simplices of dimension <= max_dim whose diameter is <= max_radius, each
    entering at its diameter (vertices at 0). When max_radius is None it
    defaults to the maximal pairwise distance, so the final complex contains
    every admissible simplex.

    Parameters
    ----------
    cloud : PointCloud
    max_radius : float, optional
        Diameter cutoff, > 0. None = max pairwise distance.
    max_dim : int
        1 (graph) or 2 (graph + triangles).
    """
    if max_dim not in (1, 2):
        raise ValueError("max_dim must be 1 or 2")
    n = len(cloud)
    if max_radius is None:
        max_radius = max(cloud.max_distance(), np.finfo(float).tiny)
    if max_radius <= 0:
        raise ValueError("max_radius must be > 0")

    dist = squareform(pdist(cloud.points)) if n > 1 else np.zeros((1, 1))

    verts = np.full((n, 3), -1, dtype=np.int64)
    verts[:, 0] = np.arange(n)
    blocks = [verts]
    vals = [np.zeros(n)]
    dims = [np.zeros(n, dtype=np.int64)]

    iu, ju = np.triu_indices(n, k=1)
    keep = dist[iu, ju] <= max_radius
    ei, ej = iu[keep], ju[keep]
    edges = np.full((len(ei), 3), -1, dtype=np.int64)
    edges[:, 0], edges[:, 1] = ei, ej
    blocks.append(edges)
    vals.append(dist[ei, ej])
    dims.append(np.ones(len(ei), dtype=np.int64))

    if max_dim == 2 and len(ei):
        adj = dist <= max_radius
        np.fill_diagonal(adj, False)
        # common neighbors k > j of every edge (i, j), in one boolean sweep
        mask = adj[ei] & adj[ej] & (np.arange(n)[None, :] > ej[:, None])
        eidx, tk = np.nonzero(mask)
        ti, tj = ei[eidx], ej[eidx]
        tris = np.stack([ti, tj, tk], axis=1)
        diam = np.maximum(dist[ti, tj], np.maximum(dist[ti, tk], dist[tj, tk]))
        blocks.append(tris)
        vals.append(diam)
        dims.append(np.full(len(tk), 2, dtype=np.int64))

    v = np.concatenate(blocks)
    f = np.concatenate(vals)
    d = np.concatenate(dims)
    order = np.lexsort((v[:, 2], v[:, 1], v[:, 0], d, f))
    return SimplicialFiltration(
        vertex_array=v[order], filtration_values=f[order], dimensions=d[order]
    )


def build_cubical_filtration(image: np.ndarray) -> CubicalFiltration:
    """Lower-star filtration of a grayscale image.

    Pixels are the top cells and carry their own value; every lower cell
    carries the minimum over the pixels it touches.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("image must be a non-empty 2-d grid")
    if not np.all(np.isfinite(img)):
        raise ValueError("image values must be finite")

    rows, cols = img.shape
    width = 2 * cols + 1
    cells = []
    for a in range(2 * rows + 1):
        r_lo = max((a - 1) // 2, 0) if a % 2 == 0 else (a - 1) // 2
        r_hi = min(a // 2, rows - 1) if a % 2 == 0 else (a - 1) // 2
        for b in range(2 * cols + 1):
            c_lo = max((b - 1) // 2, 0) if b % 2 == 0 else (b - 1) // 2
            c_hi = min(b // 2, cols - 1) if b % 2 == 0 else (b - 1) // 2
            value = float(img[r_lo : r_hi + 1, c_lo : c_hi + 1].min())
            cells.append((a * width + b, (a % 2) + (b % 2), value))
    cells.sort(key=lambda c: (c[2], c[1], c[0]))
    return CubicalFiltration(rows=rows, cols=cols, cells=cells)


def compute_persistence(
    filtration: SimplicialFiltration | CubicalFiltration,
    dims: set[int] | list[int] = (0,),
) -> list[BirthDeathDiagram]:
    """Persistence diagrams of a filtration by Z/2 column reduction.

    Returns one BirthDeathDiagram per requested homology dimension, sorted
    by dimension. Dimensions above the filtration's top cell dimension give
    empty diagrams. Essential classes carry death = inf.
    """
    wanted = sorted(set(int(q) for q in dims))
    if any(q < 0 for q in wanted):
        raise ValueError("homology dimensions must be >= 0")

    cell_dims = filtration.dims
    values = filtration.values
    max_dim = filtration.max_dim
    cells_by_dim = [np.nonzero(cell_dims == d)[0] for d in range(max_dim + 1)]
    csr = filtration.facet_csr() if len(cells_by_dim[0]) else []

    pairs: list[tuple[int, int]] = []
    essential: list[int] = []
    skip = [np.zeros(len(c), dtype=bool) for c in cells_by_dim]
    for d in range(max_dim, 0, -1):
        if not len(cells_by_dim[d]):
            continue
        faces, offsets = csr[d - 1]
        prow, pcol, positive = reduce_dimension(
            faces, offsets, len(cells_by_dim[d - 1]), skip[d]
        )
        pairs.extend(
            zip(cells_by_dim[d - 1][prow].tolist(), cells_by_dim[d][pcol].tolist())
        )
        skip[d - 1][prow] = True  # paired births: cleared in the next pass
        essential.extend(cells_by_dim[d][positive].tolist())
    essential.extend(cells_by_dim[0][~skip[0]].tolist())

    out = []
    for q in wanted:
        bd = [
            (float(values[i]), float(values[j]))
            for i, j in pairs
            if cell_dims[i] == q
        ]
        bd += [(float(values[i]), math.inf) for i in essential if cell_dims[i] == q]
        bd.sort()
        out.append(BirthDeathDiagram(pairs=bd, homology_dim=q))
    return out


def to_birth_persistence(
    bd: BirthDeathDiagram, infinite_policy: str = "ignore"
) -> Diagram:
    """Map (b, d) pairs to (b, d - b), dropping infinite and zero-persistence pairs.

    ``infinite_policy`` must be "ignore": essential classes are discarded.
    """
    if infinite_policy != "ignore":
        raise ValueError(f"unsupported infinite policy: {infinite_policy!r}")
    pts = [(b, d - b) for b, d in bd.pairs if math.isfinite(d) and d > b]
    return Diagram(
        points=np.array(pts, dtype=np.float64).reshape(-1, 2),
        homology_dim=bd.homology_dim,
    )
