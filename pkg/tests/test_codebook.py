"""Consolidation, weighting, subsampling and codebook-fit tests."""

import numpy as np
import pytest
from scipy.stats import chisquare

from pdbow.codebook import (
    GmmCodebook,
    SamplingConfig,
    consolidate,
    fit_gmm,
    fit_kmeans,
    quantile_bounds,
    subsample,
    weight_value,
)
from pdbow.persistence import Diagram

from oracles import best_two_means


def dgm(*pts):
    return Diagram(points=np.array(pts, dtype=float).reshape(-1, 2))


# ---------------------------------------------------------------- consolidate

def test_consolidate_preserves_multiplicity():
    D = consolidate([dgm((0, 1)), dgm((0, 1))])
    assert len(D) == 2
    assert np.allclose(D.points, [[0, 1], [0, 1]])


def test_consolidate_with_empty_member():
    D = consolidate([dgm(), dgm((1, 2))])
    assert np.allclose(D.points, [[1, 2]])


def test_consolidate_cardinality_additive():
    rng = np.random.default_rng(0)
    parts = []
    total = 0
    for _ in range(5):
        n = int(rng.integers(0, 6))
        total += n
        parts.append(
            Diagram(points=rng.uniform(0.1, 1, size=(n, 2)))
        )
    assert len(consolidate(parts)) == total


def test_consolidate_rejects_empty_list_and_mixed_dims():
    with pytest.raises(ValueError):
        consolidate([])
    with pytest.raises(ValueError):
        consolidate([
            Diagram(points=np.array([[0.0, 1.0]]), homology_dim=0),
            Diagram(points=np.array([[0.0, 1.0]]), homology_dim=1),
        ])


# --------------------------------------------------------------- weight ramp

def test_weight_boundary_clauses():
    assert weight_value(2.0, 2.0, 4.0) == 0.0
    assert weight_value(4.0, 2.0, 4.0) == 1.0


def test_weight_midpoint_and_saturation():
    assert weight_value(3.0, 2.0, 4.0) == pytest.approx(0.5)
    assert weight_value(14.0, 2.0, 4.0) == 1.0
    assert weight_value(-5.0, 2.0, 4.0) == 0.0


def test_weight_requires_a_below_b():
    with pytest.raises(ValueError):
        weight_value(0.0, 1.0, 1.0)


# ----------------------------------------------------------------- quantiles

def test_quantile_bounds_linear_interpolation():
    D = Diagram(points=np.stack(
        [np.zeros(100), np.arange(1.0, 101.0)], axis=1))
    a, b = quantile_bounds(D)
    assert a == pytest.approx(5.95)
    assert b == pytest.approx(95.05)


def test_quantile_bounds_two_points():
    D = dgm((0, 1.0), (0, 3.0))
    a, b = quantile_bounds(D)
    # type-7 interpolation between the order statistics
    assert a == pytest.approx(1.0 + 0.05 * 2.0)
    assert b == pytest.approx(1.0 + 0.95 * 2.0)


def test_quantile_bounds_degenerate_fallback():
    D = Diagram(points=np.stack([np.zeros(100), np.ones(100)], axis=1))
    a, b = quantile_bounds(D)
    assert a < b  # nudged apart so the ramp stays defined
    assert b == pytest.approx(1.0)
    cfg = SamplingConfig(a=a, b=b, s=10, weighted=True, seed=0)
    sample = subsample(D, cfg)  # all weights 1: sampling must still work
    assert sample.shape == (10, 2)


# ----------------------------------------------------------------- subsample

def test_subsample_exhaustion_returns_pool():
    D = dgm((0, 1), (1, 2), (2, 3))
    cfg = SamplingConfig(a=0, b=1, s=10, weighted=False, seed=1)
    assert np.allclose(subsample(D, cfg), D.points)


def test_subsample_reproducible():
    rng = np.random.default_rng(5)
    D = Diagram(points=rng.uniform(0.1, 1, size=(50, 2)))
    cfg = SamplingConfig(a=0.2, b=0.8, s=20, weighted=True, seed=9)
    s1, s2 = subsample(D, cfg), subsample(D, cfg)
    assert np.array_equal(s1, s2)


def test_subsample_uniform_when_weights_equal():
    # all persistences >= b: every weight is 1; counts should be uniform
    pts = np.stack([np.arange(10.0), np.full(10, 5.0)], axis=1)
    D = Diagram(points=pts)
    counts = np.zeros(10)
    for seed in range(3000):
        cfg = SamplingConfig(a=0.0, b=1.0, s=1, weighted=True, seed=seed)
        picked = subsample(D, cfg)
        counts[int(picked[0, 0])] += 1
    assert chisquare(counts).pvalue > 1e-4


def test_subsample_degenerate_weights_forced_choice():
    D = dgm((0, 0.5), (1, 5.0), (2, 0.5))
    cfg = SamplingConfig(a=1.0, b=2.0, s=1, weighted=True, seed=3)
    for seed in range(20):
        picked = subsample(D, SamplingConfig(a=1.0, b=2.0, s=1, weighted=True, seed=seed))
        assert np.allclose(picked, [[1, 5.0]])


def test_subsample_zero_pool_errors():
    D = dgm((0, 0.5), (1, 0.6))
    cfg = SamplingConfig(a=1.0, b=2.0, s=1, weighted=True, seed=0)
    with pytest.raises(ValueError):
        subsample(D, cfg)


def test_sampling_config_validation():
    with pytest.raises(ValueError):
        SamplingConfig(a=1.0, b=0.5, s=5, weighted=True)
    with pytest.raises(ValueError):
        SamplingConfig(a=0.0, b=1.0, s=0, weighted=False)


# ------------------------------------------------------------------- k-means

def test_kmeans_measures_each_point_as_center():
    rng = np.random.default_rng(2)
    pts = rng.uniform(size=(6, 2))
    cb = fit_kmeans(pts, 6, seed=0)
    assert sorted(map(tuple, cb.centers)) == sorted(map(tuple, pts))
    d2 = ((pts[:, None] - cb.centers[None]) ** 2).sum(axis=2)
    assert d2.min(axis=1).sum() == pytest.approx(0.0)


def test_kmeans_single_center_is_mean():
    rng = np.random.default_rng(3)
    pts = rng.uniform(size=(40, 2))
    cb = fit_kmeans(pts, 1, seed=0)
    assert np.allclose(cb.centers[0], pts.mean(axis=0))


def test_kmeans_two_blobs_match_exhaustive_optimum():
    rng = np.random.default_rng(4)
    for trial in range(20):
        blob_a = rng.normal(0.0, 0.05, size=(5, 2))
        blob_b = rng.normal(3.0, 0.05, size=(5, 2))
        pts = np.concatenate([blob_a, blob_b])
        cb = fit_kmeans(pts, 2, seed=trial)
        hist = []
        fit_kmeans(pts, 2, seed=trial, history=hist)
        assert hist[-1] == pytest.approx(best_two_means(pts), rel=1e-9)
        for center in cb.centers:
            in_a = np.abs(center).max() < 1.0
            blob = blob_a if in_a else blob_b
            lo, hi = blob.min(axis=0), blob.max(axis=0)
            assert np.all(center >= lo - 1e-12) and np.all(center <= hi + 1e-12)


def test_kmeans_rejects_too_many_centers():
    with pytest.raises(ValueError):
        fit_kmeans(np.zeros((3, 2)), 4, seed=0)


def test_kmeans_inertia_monotone():
    rng = np.random.default_rng(6)
    for trial in range(30):
        pts = rng.uniform(size=(60, 2))
        hist = []
        fit_kmeans(pts, int(rng.integers(1, 12)), seed=trial, history=hist)
        assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))


def test_kmeans_deterministic():
    rng = np.random.default_rng(7)
    pts = rng.uniform(size=(30, 2))
    c1 = fit_kmeans(pts, 5, seed=11).centers
    c2 = fit_kmeans(pts, 5, seed=11).centers
    assert np.array_equal(c1, c2)


# ----------------------------------------------------------------------- GMM

def test_gmm_single_component_closed_form():
    rng = np.random.default_rng(8)
    pts = rng.normal(size=(200, 2)) @ np.array([[1.0, 0.3], [0.0, 0.5]])
    reg = 1e-8
    cb = fit_gmm(pts, 1, seed=0, reg=reg)
    assert cb.weights[0] == pytest.approx(1.0)
    assert np.allclose(cb.means[0], pts.mean(axis=0), atol=1e-9)
    diff = pts - pts.mean(axis=0)
    ml_cov = diff.T @ diff / len(pts)
    assert np.allclose(cb.covariances[0], ml_cov, atol=1e-9)


def test_gmm_loglik_monotone():
    rng = np.random.default_rng(9)
    for trial in range(20):
        pts = rng.uniform(size=(50, 2))
        hist = []
        fit_gmm(pts, int(rng.integers(1, 5)), seed=trial, reg=1e-6, history=hist)
        assert all(b >= a for a, b in zip(hist, hist[1:]))


def test_gmm_two_blobs_recovers_posteriors():
    rng = np.random.default_rng(10)
    blob_a = rng.normal((0, 0), 0.1, size=(60, 2))
    blob_b = rng.normal((5, 5), 0.1, size=(60, 2))
    pts = np.concatenate([blob_a, blob_b])
    cb = fit_gmm(pts, 2, seed=0, reg=1e-9)
    # order components by first mean coordinate
    order = np.argsort(cb.means[:, 0])
    assert np.allclose(cb.means[order[0]], blob_a.mean(axis=0), atol=0.05)
    assert np.allclose(cb.means[order[1]], blob_b.mean(axis=0), atol=0.05)
    assert np.allclose(cb.weights, [0.5, 0.5], atol=1e-6)
    # responsibilities essentially one-hot: compare with exact posterior
    from pdbow.encoding import gaussian_pdf

    for p in blob_a[:10]:
        num = [w * gaussian_pdf(p, m, c)
               for w, m, c in zip(cb.weights, cb.means, cb.covariances)]
        resp = num[order[0]] / sum(num)
        assert resp > 1 - 1e-8


def test_gmm_covariance_floor_and_weights():
    rng = np.random.default_rng(11)
    pts = np.repeat(rng.uniform(size=(4, 2)), 10, axis=0)  # degenerate blobs
    reg = 1e-3
    cb = fit_gmm(pts, 3, seed=0, reg=reg)
    for cov in cb.covariances:
        assert np.linalg.eigvalsh(cov)[0] >= reg - 1e-12
    assert cb.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(cb.weights > 0)


def test_gmm_rejects_bad_args():
    pts = np.zeros((3, 2))
    with pytest.raises(ValueError):
        fit_gmm(pts, 4, seed=0, reg=1e-6)
    with pytest.raises(ValueError):
        fit_gmm(pts, 1, seed=0, reg=0.0)


def test_gmm_codebook_validation():
    with pytest.raises(ValueError):
        GmmCodebook(
            weights=np.array([0.6, 0.6]),
            means=np.zeros((2, 2)),
            covariances=np.stack([np.eye(2)] * 2),
        )
