"""Synthetic six-class shape dataset and labeled diagram containers.

Each class is a 3-d point cloud sampled from a geometric object (unit cube,
circle, sphere, cluster arrangements, torus) and perturbed with isotropic
Gaussian noise. Class geometry distinguishes the dimension-1 persistence
of the clouds.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .persistence import Diagram, PointCloud

__all__ = [
    "ShapeClass",
    "LabeledDiagramSet",
    "generate_shape",
    "generate_dataset",
    "DEFAULT_NOISE_SIGMA",
]

DEFAULT_NOISE_SIGMA = 0.1

#: torus radii chosen to fit the diameter-1 scale of the other shapes
TORUS_MAJOR_RADIUS = 0.5
TORUS_MINOR_RADIUS = 0.25

#: spread of minor cluster centers around their major center; must stay
#: visible above the point noise or the hierarchical class degenerates into
#: the plain clusters class, yet small against the ~0.55 typical separation
#: of the major centers
MINOR_CLUSTER_SIGMA = 0.2


class ShapeClass(Enum):
    CUBE = 0
    CIRCLE = 1
    SPHERE = 2
    CLUSTERS = 3
    CLUSTERS_IN_CLUSTERS = 4
    TORUS = 5

    @property
    def label(self) -> int:
        return self.value


@dataclass(frozen=True)
class LabeledDiagramSet:
    """Diagrams with integer class labels and the class-name legend."""

    entries: list[tuple[Diagram, int]]
    class_names: list[str]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("labeled set must be non-empty")
        for _, label in self.entries:
            if not 0 <= label < len(self.class_names):
                raise ValueError(f"label {label} out of range")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def diagrams(self) -> list[Diagram]:
        return [d for d, _ in self.entries]

    @property
    def labels(self) -> np.ndarray:
        return np.array([l for _, l in self.entries], dtype=np.intp)


def _torus_points(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample on a torus surface via area-corrected rejection."""
    R, r = TORUS_MAJOR_RADIUS, TORUS_MINOR_RADIUS
    theta = np.empty(n)
    filled = 0
    while filled < n:
        cand = rng.uniform(0.0, 2.0 * np.pi, size=2 * (n - filled))
        accept = rng.uniform(0.0, 1.0, size=cand.size) < (R + r * np.cos(cand)) / (R + r)
        take = cand[accept][: n - filled]
        theta[filled : filled + take.size] = take
        filled += take.size
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    ring = R + r * np.cos(theta)
    return np.stack([ring * np.cos(phi), ring * np.sin(phi), r * np.sin(theta)], axis=1)


def generate_shape(
    shape: ShapeClass, n_points: int, noise_sigma: float = DEFAULT_NOISE_SIGMA,
    seed: int = 0, minor_cluster_sigma: float | None = None,
) -> PointCloud:
    """Sample one noisy point cloud of the given class (3-d, seeded).

    The base sample lies exactly on the ideal object; every point is then
    displaced by isotropic Gaussian noise of the given standard deviation.
    ``minor_cluster_sigma`` overrides the spread of the minor cluster
    centers for the hierarchical class (default MINOR_CLUSTER_SIGMA).
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    rng = np.random.default_rng(seed)

    if shape is ShapeClass.CUBE:
        base = rng.uniform(0.0, 1.0, size=(n_points, 3))
    elif shape is ShapeClass.CIRCLE:
        ang = rng.uniform(0.0, 2.0 * np.pi, size=n_points)
        base = np.stack(
            [0.5 * np.cos(ang), 0.5 * np.sin(ang), np.zeros(n_points)], axis=1
        )
    elif shape is ShapeClass.SPHERE:
        vec = rng.standard_normal((n_points, 3))
        vec /= np.linalg.norm(vec, axis=1, keepdims=True)
        base = 0.5 * vec
    elif shape is ShapeClass.CLUSTERS:
        centers = rng.uniform(0.0, 1.0, size=(3, 3))
        base = centers[rng.integers(0, 3, size=n_points)]
    elif shape is ShapeClass.CLUSTERS_IN_CLUSTERS:
        spread = (
            MINOR_CLUSTER_SIGMA if minor_cluster_sigma is None
            else minor_cluster_sigma
        )
        major = rng.uniform(0.0, 1.0, size=(3, 3))
        minor = (
            major[:, None, :] + rng.normal(0.0, spread, size=(3, 3, 3))
        ).reshape(9, 3)
        base = minor[rng.integers(0, 9, size=n_points)]
    elif shape is ShapeClass.TORUS:
        base = _torus_points(n_points, rng)
    else:  # pragma: no cover
        raise ValueError(f"unknown shape class {shape}")

    if noise_sigma > 0:
        base = base + rng.normal(0.0, noise_sigma, size=base.shape)
    return PointCloud(points=base)


def generate_dataset(
    clouds_per_class: int,
    points_per_cloud: int,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
    seed: int = 0,
) -> list[tuple[PointCloud, int]]:
    """Balanced labeled clouds: clouds_per_class for each of the six classes.

    Per-cloud seeds are derived from the master seed, so the whole dataset
    is reproducible while clouds stay mutually independent.
    """
    if clouds_per_class < 1 or points_per_cloud < 1:
        raise ValueError("sizes must be positive")
    seeder = np.random.default_rng(seed)
    out = []
    for shape in ShapeClass:
        for _ in range(clouds_per_class):
            child = int(seeder.integers(0, 2**63 - 1))
            out.append(
                (generate_shape(shape, points_per_cloud, noise_sigma, child),
                 shape.label)
            )
    return out
