"""Diagram metric tests: hand cases, oracle agreement, metric axioms."""

import numpy as np
import pytest

from pdbow.metrics import bottleneck, wasserstein, wasserstein_oracle
from pdbow.persistence import Diagram

from oracles import wasserstein_exhaustive


def dgm(*pts):
    return Diagram(points=np.array(pts, dtype=float).reshape(-1, 2))


def random_diagram(rng, max_pts=3):
    n = int(rng.integers(0, max_pts + 1))
    if n == 0:
        return dgm()
    return Diagram(
        points=np.stack(
            [rng.uniform(0, 2, size=n), rng.uniform(0.05, 2, size=n)], axis=1
        )
    )


def test_wasserstein_identity():
    B = dgm((0, 1), (2, 0.5), (1, 1.5))
    assert wasserstein(B, B, q=1) == 0.0


def test_wasserstein_single_point_to_axis():
    assert wasserstein(dgm((3, 2)), dgm(), q=1) == pytest.approx(2.0)


def test_wasserstein_prefers_direct_match():
    # matching the points costs 1; sending both to the axis costs 3
    assert wasserstein(dgm((0, 2)), dgm((0, 1)), q=1) == pytest.approx(1.0)


def test_wasserstein_rejects_bad_q():
    with pytest.raises(ValueError):
        wasserstein(dgm((0, 1)), dgm((0, 1)), q=0.5)


def test_wasserstein_q2():
    # two points each to the axis: (2^2 + 1^2)^(1/2)
    d = wasserstein(dgm((0, 2), (5, 1)), dgm(), q=2)
    assert d == pytest.approx(np.sqrt(5.0))


def test_matching_structure():
    B, B2 = dgm((0, 2), (4, 1)), dgm((0, 2.2))
    dist, matching = wasserstein(B, B2, q=1, return_matching=True)
    left = sorted(i for i, _ in matching.assignment)
    right = sorted(j for _, j in matching.assignment if j >= 0)
    assert set(left) >= {0, 1} and right == [0]
    assert matching.cost == pytest.approx(dist)


def test_bottleneck_hand_cases():
    assert bottleneck(dgm((3, 2)), dgm()) == pytest.approx(2.0)
    assert bottleneck(dgm((0, 2), (5, 2)), dgm((0, 2))) == pytest.approx(2.0)
    B = dgm((0, 1), (2, 0.5))
    assert bottleneck(B, B) == 0.0


def test_oracle_trivials():
    assert wasserstein_oracle(dgm(), dgm()) == 0.0
    assert wasserstein_oracle(dgm((1, 1)), dgm((1, 1))) == 0.0
    with pytest.raises(ValueError):
        wasserstein_oracle(dgm(*[(0, 1)] * 4), dgm(*[(0, 1)] * 4))


def test_hungarian_equals_oracles():
    rng = np.random.default_rng(0)
    for _ in range(300):
        B, B2 = random_diagram(rng), random_diagram(rng)
        q = float(rng.choice([1.0, 1.5, 2.0]))
        exact = wasserstein(B, B2, q=q)
        assert exact == pytest.approx(wasserstein_oracle(B, B2, q=q), abs=1e-9)
        # second, structurally different enumeration
        assert exact == pytest.approx(
            wasserstein_exhaustive(B.points, B2.points, q=q), abs=1e-9
        )


def test_symmetry_and_triangle_inequality():
    rng = np.random.default_rng(1)
    for _ in range(100):
        A, B, C = (random_diagram(rng, max_pts=5) for _ in range(3))
        assert wasserstein(A, B) == pytest.approx(wasserstein(B, A), abs=1e-9)
        assert bottleneck(A, B) == pytest.approx(bottleneck(B, A), abs=1e-9)
        ab, bc, ac = wasserstein(A, B), wasserstein(B, C), wasserstein(A, C)
        assert ac <= ab + bc + 1e-9


def test_bottleneck_below_w1():
    rng = np.random.default_rng(2)
    for _ in range(100):
        A, B = random_diagram(rng, max_pts=5), random_diagram(rng, max_pts=5)
        assert bottleneck(A, B) <= wasserstein(A, B) + 1e-9


def test_bottleneck_equals_optimum_on_tiny_instances():
    # bottleneck = min over matchings of max pair cost; brute force via the
    # q-Wasserstein limit: W_q -> bottleneck as q grows
    rng = np.random.default_rng(3)
    for _ in range(50):
        A, B = random_diagram(rng, max_pts=3), random_diagram(rng, max_pts=3)
        approx = wasserstein_exhaustive(A.points, B.points, q=64.0)
        assert bottleneck(A, B) == pytest.approx(approx, abs=0.05)
