"""Front door of the bag-of-words pipeline.

``fit_bow_encoder`` consumes only training diagrams (consolidate, pick
weighting bounds, subsample, cluster) and returns an encoder that maps any
diagram to its feature vector. Keeping the fit and the encode steps on
separate objects makes test-set leakage structurally impossible: nothing
about the test split ever reaches codebook learning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import (
    GmmCodebook,
    KmeansCodebook,
    SamplingConfig,
    consolidate,
    fit_gmm,
    fit_kmeans,
    quantile_bounds,
    subsample,
)
from .encoding import encode_pbow, encode_spbow, normalize
from .persistence import Diagram

__all__ = ["BowEncoder", "fit_bow_encoder", "default_covariance_floor"]


def default_covariance_floor(points: np.ndarray) -> float:
    """Covariance eigenvalue floor: 5e-3 times the mean coordinate variance.

    Keeps mixture components no thinner than a few percent of the data
    spread; with a much smaller floor, EM grows needle components around
    dense spots whose huge densities then dominate the soft encoding.
    """
    var = float(np.asarray(points, dtype=np.float64).var(axis=0).mean())
    return 5e-3 * max(var, 1e-12)


@dataclass(frozen=True)
class BowEncoder:
    """A fitted codebook plus the encoding recipe, applied to any diagram."""

    kind: str  # "pbow" | "spbow"
    kmeans: KmeansCodebook | None
    gmm: GmmCodebook | None
    sampling: SamplingConfig

    @property
    def n_words(self) -> int:
        cb = self.kmeans if self.kind == "pbow" else self.gmm
        return cb.n_words

    def encode(self, diagram: Diagram, normalized: bool = True) -> np.ndarray:
        if self.kind == "pbow":
            fv = encode_pbow(diagram, self.kmeans)
            return (normalize(fv) if normalized else fv).values
        return encode_spbow(diagram, self.gmm, normalized=normalized).values

    def encode_matrix(self, diagrams: list[Diagram]) -> np.ndarray:
        """One feature row per diagram; order-preserving."""
        return np.stack([self.encode(d) for d in diagrams], axis=0)


def fit_bow_encoder(
    train_diagrams: list[Diagram],
    kind: str = "pbow",
    n_words: int = 50,
    weighted: bool = True,
    sample_size: int = 10000,
    seed: int = 0,
    reg: float | None = None,
    max_iter: int = 60,
) -> BowEncoder:
    """Learn a codebook from training diagrams only.

    Weighted mode picks the ramp bounds from the 0.05/0.95 persistence
    quantiles of the consolidated diagram. ``reg`` (GMM covariance floor)
    defaults to 1e-6 of the sampled points' variance.
    """
    if kind not in ("pbow", "spbow"):
        raise ValueError(f"unknown encoder kind {kind!r}")
    D = consolidate(train_diagrams)
    if weighted:
        a, b = quantile_bounds(D)
    else:
        a, b = 0.0, 1.0  # unused by unweighted sampling
    cfg = SamplingConfig(a=a, b=b, s=sample_size, weighted=weighted, seed=seed)
    points = subsample(D, cfg)
    if n_words > points.shape[0]:
        raise ValueError(
            f"codebook size {n_words} exceeds the {points.shape[0]} sampled points"
        )
    if kind == "pbow":
        km = fit_kmeans(points, n_words, max_iter=max_iter, seed=seed)
        return BowEncoder(kind=kind, kmeans=km, gmm=None, sampling=cfg)
    if reg is None:
        reg = default_covariance_floor(points)
    gm = fit_gmm(points, n_words, seed=seed, reg=reg, max_iter=max_iter)
    return BowEncoder(kind=kind, kmeans=None, gmm=gm, sampling=cfg)
