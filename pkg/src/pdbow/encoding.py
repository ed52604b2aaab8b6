"""Encoding of diagrams against codebooks.

Hard assignment counts nearest-center hits (bag-of-words histogram); soft
assignment sums weighted Gaussian likelihoods per component. Both pass
through the standard signed-square-root + L2 normalization. The soft
encoder additionally admits a computable stability bound: each component
density is Lipschitz, and the certificate carries the constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import GmmCodebook, KmeansCodebook
from .persistence import Diagram

__all__ = [
    "FeatureVector",
    "StabilityCertificate",
    "KDTree",
    "nearest_center",
    "encode_pbow",
    "encode_spbow",
    "normalize",
    "gaussian_pdf",
    "stability_certificate",
]


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-length encoding of one diagram against one codebook."""

    values: np.ndarray
    codebook_id: str = ""
    normalized: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        object.__setattr__(self, "values", v)
        if self.normalized and v.any():
            norm = np.linalg.norm(v)
            if abs(norm - 1.0) > 1e-12:
                raise ValueError(f"normalized vector has norm {norm}")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class StabilityCertificate:
    """Per-component Lipschitz constants and the resulting bound constant.

    For any two diagrams, the raw soft encoding moves by at most
    ``constant * W1`` in the sup norm.
    """

    lipschitz: np.ndarray
    constant: float

    def __post_init__(self):
        L = np.asarray(self.lipschitz, dtype=np.float64).ravel()
        if np.any(L < 0) or self.constant < 0:
            raise ValueError("Lipschitz constants must be non-negative")
        object.__setattr__(self, "lipschitz", L)


class KDTree:
    """Static 2-d k-d tree for exact nearest-neighbor queries.

    Ties on distance resolve to the lowest point index, matching the linear
    scan exactly.
    """

    def __init__(self, points: np.ndarray):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if pts.shape[0] == 0:
            raise ValueError("empty point set")
        self.points = pts
        # nodes as (point_index, axis, left, right); -1 = no child
        self._nodes: list[list[int]] = []
        self._root = self._build(np.arange(pts.shape[0]), 0)

    def _build(self, idx: np.ndarray, depth: int) -> int:
        if len(idx) == 0:
            return -1
        axis = depth % 2
        order = idx[np.argsort(self.points[idx, axis], kind="stable")]
        mid = len(order) // 2
        node = len(self._nodes)
        self._nodes.append([int(order[mid]), axis, -1, -1])
        self._nodes[node][2] = self._build(order[:mid], depth + 1)
        self._nodes[node][3] = self._build(order[mid + 1 :], depth + 1)
        return node

    def query(self, x: np.ndarray) -> int:
        """Index of the nearest stored point under squared Euclidean distance."""
        x = np.asarray(x, dtype=np.float64).ravel()
        best = [np.inf, -1]

        def visit(node: int) -> None:
            if node == -1:
                return
            pi, axis, left, right = self._nodes[node]
            p = self.points[pi]
            d2 = (x[0] - p[0]) ** 2 + (x[1] - p[1]) ** 2
            if d2 < best[0] or (d2 == best[0] and pi < best[1]):
                best[0], best[1] = d2, pi
            gap = x[axis] - p[axis]
            near, far = (left, right) if gap < 0 else (right, left)
            visit(near)
            # equality must still descend: an equally distant lower index
            # may live on the far side
            if gap * gap <= best[0]:
                visit(far)

        visit(self._root)
        return best[1]


def nearest_center(x: np.ndarray, cb: KmeansCodebook, tree: KDTree | None = None) -> int:
    """Index of the Euclidean-nearest center, lowest index on ties.

    With a prebuilt ``tree`` the search walks the k-d tree; otherwise it is
    a linear scan. Both return identical answers on every input.
    """
    if tree is not None:
        return tree.query(x)
    x = np.asarray(x, dtype=np.float64).ravel()
    d2 = (cb.centers[:, 0] - x[0]) ** 2 + (cb.centers[:, 1] - x[1]) ** 2
    return int(d2.argmin())


def encode_pbow(B: Diagram, cb: KmeansCodebook, use_tree: bool = True) -> FeatureVector:
    """Raw bag-of-words histogram: counts of points per nearest center."""
    counts = np.zeros(cb.n_words)
    if len(B):
        if use_tree and cb.n_words >= 8 and len(B) > 4:
            tree = KDTree(cb.centers)
            for p in B.points:
                counts[tree.query(p)] += 1
        else:
            d2 = (
                (B.points[:, None, :] - cb.centers[None, :, :]) ** 2
            ).sum(axis=2)
            np.add.at(counts, d2.argmin(axis=1), 1)
    return FeatureVector(values=counts, normalized=False)


def normalize(v: FeatureVector) -> FeatureVector:
    """Signed square root of each component, then division by the L2 norm.

    The all-zero vector maps to itself.
    """
    rooted = np.sign(v.values) * np.sqrt(np.abs(v.values))
    norm = np.linalg.norm(rooted)
    if norm == 0:
        return FeatureVector(values=rooted, codebook_id=v.codebook_id, normalized=True)
    return FeatureVector(
        values=rooted / norm, codebook_id=v.codebook_id, normalized=True
    )


def gaussian_pdf(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    """2-d Gaussian density exp(-0.5 (x-mu)' C^-1 (x-mu)) / (2 pi |C|^0.5)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    mean = np.asarray(mean, dtype=np.float64).ravel()
    cov = np.asarray(cov, dtype=np.float64).reshape(2, 2)
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    if det <= 0 or cov[0, 0] <= 0:
        raise ValueError("covariance must be symmetric positive-definite")
    diff = x - mean
    maha = (
        diff[0] * (cov[1, 1] * diff[0] - cov[0, 1] * diff[1])
        + diff[1] * (cov[0, 0] * diff[1] - cov[1, 0] * diff[0])
    ) / det
    return float(math.exp(-0.5 * maha) / (2.0 * math.pi * math.sqrt(det)))


def _component_sums(points: np.ndarray, cb: GmmCodebook) -> np.ndarray:
    """Sum of each component's density over the points, times its weight."""
    covs = cb.covariances
    det = covs[:, 0, 0] * covs[:, 1, 1] - covs[:, 0, 1] * covs[:, 1, 0]
    inv = np.empty_like(covs)
    inv[:, 0, 0] = covs[:, 1, 1]
    inv[:, 1, 1] = covs[:, 0, 0]
    inv[:, 0, 1] = -covs[:, 0, 1]
    inv[:, 1, 0] = -covs[:, 1, 0]
    inv /= det[:, None, None]
    diff = points[:, None, :] - cb.means[None, :, :]
    maha = np.einsum("nki,kij,nkj->nk", diff, inv, diff)
    dens = np.exp(-0.5 * maha).sum(axis=0) / (2.0 * np.pi * np.sqrt(det))
    return cb.weights * dens


def encode_spbow(
    B: Diagram, cb: GmmCodebook, normalized: bool = True
) -> FeatureVector:
    """Soft encoding: weighted sum of each component's likelihoods over B.

    ``normalized=False`` returns the raw vector, the quantity covered by the
    Wasserstein stability bound; the default applies the same signed-sqrt +
    L2 normalization as the hard encoding.
    """
    raw = _component_sums(B.points, cb) if len(B) else np.zeros(cb.n_words)
    fv = FeatureVector(values=raw, normalized=False)
    return normalize(fv) if normalized else fv


def _grad_l1_norm(xy: np.ndarray, mean: np.ndarray, inv: np.ndarray, det: float) -> np.ndarray:
    """L1 norm of the density gradient on a batch of points (m, 2)."""
    diff = xy - mean
    maha = np.einsum("ni,ij,nj->n", diff, inv, diff)
    dens = np.exp(-0.5 * maha) / (2.0 * np.pi * math.sqrt(det))
    grad = -dens[:, None] * (diff @ inv.T)
    return np.abs(grad).sum(axis=1)


def _lipschitz_constant(mean: np.ndarray, cov: np.ndarray, tol: float = 1e-6) -> float:
    """Sup of the gradient's L1 norm, by grid search with local refinement.

    The L1 norm of the gradient is the Lipschitz constant with respect to
    the L-inf ground metric. The search grid spans 6 sigma around the mean
    and zooms on the argmax until the value stabilizes.
    """
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    inv = np.array([[cov[1, 1], -cov[0, 1]], [-cov[1, 0], cov[0, 0]]]) / det
    sigma = math.sqrt(float(np.linalg.eigvalsh(cov)[-1]))

    side = 41
    center = mean.astype(np.float64)
    half = 6.0 * sigma
    best = 0.0
    for _ in range(60):
        gx = np.linspace(center[0] - half, center[0] + half, side)
        gy = np.linspace(center[1] - half, center[1] + half, side)
        xx, yy = np.meshgrid(gx, gy, indexing="ij")
        vals = _grad_l1_norm(
            np.stack([xx.ravel(), yy.ravel()], axis=1), mean, inv, det
        )
        k = int(vals.argmax())
        new_best = float(vals[k])
        center = np.array([xx.ravel()[k], yy.ravel()[k]])
        done = abs(new_best - best) < tol * max(1.0, new_best)
        best = max(best, new_best)
        if done:
            break
        half = 2.0 * (2.0 * half / (side - 1))  # zoom to a few cells around argmax
    return best


def stability_certificate(cb: GmmCodebook) -> StabilityCertificate:
    """Lipschitz constants of each component density and C = max |w_i L_i|.

    The constants are measured against the L-inf norm on the plane, so the
    raw soft encoding of any diagram moves by at most C times the
    1-Wasserstein distance when the diagram is perturbed.
    """
    L = np.array(
        [
            _lipschitz_constant(cb.means[k], cb.covariances[k])
            for k in range(cb.n_words)
        ]
    )
    C = float(np.abs(cb.weights * L).max())
    return StabilityCertificate(lipschitz=L, constant=C)
