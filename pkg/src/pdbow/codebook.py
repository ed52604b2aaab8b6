"""Codebook learning on consolidated diagrams.

Training diagrams are merged into one big multiset of birth-persistence
points, optionally subsampled with preference for high persistence, then
clustered: k-means for hard codebooks, a Gaussian mixture fitted by EM for
soft ones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .persistence import Diagram

__all__ = [
    "SamplingConfig",
    "KmeansCodebook",
    "GmmCodebook",
    "consolidate",
    "weight_value",
    "quantile_bounds",
    "subsample",
    "fit_kmeans",
    "fit_gmm",
]

logger = logging.getLogger(__name__)

_DEGENERATE_EPS = 1e-9


@dataclass(frozen=True)
class SamplingConfig:
    """Parameters of the persistence-weighted subsampling step.

    a, b are the thresholds of the piecewise-linear weight (a < b when
    weighting is on), s is the target sample size.
    """

    a: float
    b: float
    s: int = 10000
    weighted: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.s < 1:
            raise ValueError("sample size must be >= 1")
        if self.weighted and not self.a < self.b:
            raise ValueError("weighting requires a < b")


@dataclass(frozen=True)
class KmeansCodebook:
    """Hard codebook: cluster centers in the birth-persistence plane."""

    centers: np.ndarray
    iterations_run: int = 0

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=np.float64).reshape(-1, 2)
        if c.shape[0] < 1:
            raise ValueError("codebook needs at least one center")
        if not np.all(np.isfinite(c)):
            raise ValueError("centers must be finite")
        object.__setattr__(self, "centers", c)

    @property
    def n_words(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class GmmCodebook:
    """Soft codebook: weights, means and full covariances of a 2-d GMM."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        mu = np.asarray(self.means, dtype=np.float64).reshape(-1, 2)
        cov = np.asarray(self.covariances, dtype=np.float64).reshape(-1, 2, 2)
        if not (len(w) == len(mu) == len(cov)) or len(w) < 1:
            raise ValueError("weights, means, covariances must align, N >= 1")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        for s in cov:
            if np.linalg.eigvalsh(s)[0] <= 0:
                raise ValueError("covariances must be positive-definite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def n_words(self) -> int:
        return len(self.weights)


def consolidate(diagrams: list[Diagram]) -> Diagram:
    """Multiset union of diagrams sharing one homology dimension."""
    if not diagrams:
        raise ValueError("cannot consolidate an empty list of diagrams")
    hdims = {d.homology_dim for d in diagrams}
    if len(hdims) > 1:
        raise ValueError(f"mixed homology dimensions: {sorted(hdims)}")
    pts = np.concatenate([d.points for d in diagrams], axis=0)
    return Diagram(points=pts, homology_dim=diagrams[0].homology_dim)


def weight_value(t: float, a: float, b: float):
    """Piecewise-linear weight: 0 below a, ramp on [a, b), 1 from b on."""
    if not a < b:
        raise ValueError("requires a < b")
    t = np.asarray(t, dtype=np.float64)
    w = np.clip((t - a) / (b - a), 0.0, 1.0)
    w = np.where(t >= b, 1.0, w)
    return float(w) if w.ndim == 0 else w


def quantile_bounds(D: Diagram) -> tuple[float, float]:
    """0.05 and 0.95 quantiles of the persistence coordinate.

    Linear interpolation between order statistics. When all persistences are
    equal the ramp would be undefined, so a is nudged just below b; every
    point then has weight 1 and sampling degrades to unweighted.
    """
    if len(D) < 2:
        raise ValueError("need at least 2 points for quantile bounds")
    a, b = np.quantile(D.persistences, [0.05, 0.95])
    if not a < b:
        logger.warning("degenerate persistence quantiles (a == b == %g); "
                       "weighting will be uniform", b)
        a = b - max(_DEGENERATE_EPS, abs(b) * _DEGENERATE_EPS)
    return float(a), float(b)


def subsample(D: Diagram, cfg: SamplingConfig) -> np.ndarray:
    """Sample cfg.s diagram points without replacement, seeded.

    Weighted mode draws with probability proportional to the persistence
    weight, after excluding zero-weight points from the pool. If the sample
    size covers the whole pool, the pool is returned as-is.
    """
    rng = np.random.default_rng(cfg.seed)
    pts = D.points
    if cfg.weighted:
        w = weight_value(D.persistences, cfg.a, cfg.b)
        keep = w > 0
        pts, w = pts[keep], w[keep]
        if pts.shape[0] == 0:
            raise ValueError("all points have zero weight; nothing to sample")
        if cfg.s >= pts.shape[0]:
            return pts.copy()
        idx = rng.choice(pts.shape[0], size=cfg.s, replace=False, p=w / w.sum())
    else:
        if pts.shape[0] == 0:
            raise ValueError("cannot sample from an empty diagram")
        if cfg.s >= pts.shape[0]:
            return pts.copy()
        idx = rng.choice(pts.shape[0], size=cfg.s, replace=False)
    return pts[np.sort(idx)]


def _kmeans_pp_init(points: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: points chosen with probability proportional to
    squared distance from the nearest already-chosen center."""
    chosen = [rng.integers(points.shape[0])]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, n):
        total = d2.sum()
        if total <= 0:
            # all remaining mass on already-chosen points: pick any unchosen
            unchosen = np.setdiff1d(np.arange(points.shape[0]), chosen)
            nxt = int(rng.choice(unchosen))
        else:
            nxt = int(rng.choice(points.shape[0], p=d2 / total))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[chosen].copy()


def fit_kmeans(
    points: np.ndarray,
    n_words: int,
    max_iter: int = 100,
    seed: int = 0,
    history: list | None = None,
) -> KmeansCodebook:
    """Lloyd's algorithm from a k-means++ start, deterministic given seed.

    Empty clusters are re-seeded at the point farthest from its assigned
    center, which keeps the inertia sequence non-increasing. Pass a list as
    ``history`` to collect the per-iteration inertia.

    Iteration stops at an assignment fixpoint or after max_iter rounds.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if n_words > pts.shape[0]:
        raise ValueError(f"asked for {n_words} centers from {pts.shape[0]} points")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(pts, n_words, rng)

    labels = np.full(pts.shape[0], -1)
    iterations = 0
    pts_sq = (pts**2).sum(axis=1)
    for _ in range(max_iter):
        d2 = (
            pts_sq[:, None] - 2.0 * (pts @ centers.T) + (centers**2).sum(axis=1)[None, :]
        )
        new_labels = d2.argmin(axis=1)
        point_d2 = d2[np.arange(pts.shape[0]), new_labels]
        if history is not None:
            history.append(float(point_d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        iterations += 1
        # Re-seed empty clusters before the mean update so every center is
        # the exact mean of its final members; this keeps inertia monotone.
        occupied = np.bincount(labels, minlength=n_words) > 0
        for k in np.nonzero(~occupied)[0]:
            far = int(point_d2.argmax())
            labels[far] = k
            point_d2[far] = 0.0
        for k in range(n_words):
            mask = labels == k
            if mask.any():
                centers[k] = pts[mask].mean(axis=0)
    return KmeansCodebook(centers=centers, iterations_run=iterations)


def _log_gauss_all(pts: np.ndarray, means: np.ndarray, covs: np.ndarray) -> np.ndarray:
    """Log densities of every component at every point, shape (n, k).

    The 2x2 quadratic form is expanded by hand so everything stays
    elementwise on (n, k) arrays.
    """
    det = covs[:, 0, 0] * covs[:, 1, 1] - covs[:, 0, 1] * covs[:, 1, 0]
    i00 = covs[:, 1, 1] / det
    i11 = covs[:, 0, 0] / det
    i01 = -covs[:, 0, 1] / det
    dx = pts[:, 0, None] - means[None, :, 0]
    dy = pts[:, 1, None] - means[None, :, 1]
    maha = i00 * dx * dx + 2.0 * i01 * dx * dy + i11 * dy * dy
    return -0.5 * maha - np.log(2.0 * np.pi) - 0.5 * np.log(det)[None, :]


def _floor_eigenvalues(cov: np.ndarray, floor: float) -> np.ndarray:
    """Clamp the eigenvalues of symmetric 2x2 matrices (batched) from below."""
    vals, vecs = np.linalg.eigh(cov)
    clamped = np.maximum(vals, floor)
    if cov.ndim == 2:
        return (vecs * clamped) @ vecs.T
    return (vecs * clamped[..., None, :]) @ vecs.transpose(0, 2, 1)


def fit_gmm(
    points: np.ndarray,
    n_words: int,
    seed: int = 0,
    reg: float = 1e-6,
    tol: float = 1e-6,
    max_iter: int = 200,
    history: list | None = None,
) -> GmmCodebook:
    """Full-covariance Gaussian mixture by EM, started from k-means.

    The M-step maximizes over covariances with eigenvalues >= reg (exact
    constrained maximizer: eigenvalue clamping), so the log-likelihood is
    non-decreasing by construction; a step that would lower it numerically
    is rejected and ends the run. Pass ``history`` to collect per-iteration
    log-likelihoods.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n_pts = pts.shape[0]
    if n_words > n_pts:
        raise ValueError(f"asked for {n_words} components from {n_pts} points")
    if reg <= 0:
        raise ValueError("covariance floor must be > 0")

    km = fit_kmeans(pts, n_words, max_iter=50, seed=seed)
    d2 = ((pts[:, None, :] - km.centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    weights = np.zeros(n_words)
    means = km.centers.copy()
    covs = np.empty((n_words, 2, 2))
    for k in range(n_words):
        mask = labels == k
        weights[k] = max(mask.sum(), 1) / n_pts
        sub = pts[mask] if mask.any() else pts
        diff = sub - sub.mean(axis=0)
        covs[k] = _floor_eigenvalues(diff.T @ diff / sub.shape[0], reg)
    weights /= weights.sum()

    def log_resp(w, mu, cov):
        lp = np.log(w)[None, :] + _log_gauss_all(pts, mu, cov)
        norm = np.logaddexp.reduce(lp, axis=1)
        return lp - norm[:, None], float(norm.sum())

    last_ll = None
    previous = (weights, means, covs)
    for _ in range(max_iter):
        lr, ll = log_resp(weights, means, covs)
        if last_ll is not None:
            if ll < last_ll:
                weights, means, covs = previous  # numerical plateau: reject
                break
            if ll - last_ll < tol:
                last_ll = ll
                if history is not None:
                    history.append(ll)
                break
        if history is not None:
            history.append(ll)
        last_ll = ll
        previous = (weights, means, covs)

        resp = np.exp(lr)
        mass = resp.sum(axis=0)
        mass = np.maximum(mass, 1e-300)  # keep weights strictly positive
        new_weights = mass / mass.sum()
        new_means = (resp.T @ pts) / mass[:, None]
        dx = pts[:, 0, None] - new_means[None, :, 0]
        dy = pts[:, 1, None] - new_means[None, :, 1]
        scatter = np.empty((n_words, 2, 2))
        scatter[:, 0, 0] = (resp * dx * dx).sum(axis=0) / mass
        scatter[:, 1, 1] = (resp * dy * dy).sum(axis=0) / mass
        scatter[:, 0, 1] = scatter[:, 1, 0] = (resp * dx * dy).sum(axis=0) / mass
        new_covs = _floor_eigenvalues(scatter, reg)
        weights, means, covs = new_weights, new_means, new_covs

    return GmmCodebook(weights=weights, means=means, covariances=covs)
