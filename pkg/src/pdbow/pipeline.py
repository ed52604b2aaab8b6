"""End-to-end orchestration: configuration, batched persistence, sweeps.

A single PipelineConfig carries every knob and every seed, so any run is
reproducible from its JSON form. Per-cloud persistence jobs are independent
and can fan out over processes; results are order-preserving, so the output
never depends on the schedule.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .classify import GridResult, SplitSpec, grid_search
from .codebook import GmmCodebook
from .datasets import LabeledDiagramSet, ShapeClass, generate_dataset
from .encoding import encode_spbow, stability_certificate
from .metrics import wasserstein
from .persistence import (
    Diagram,
    PointCloud,
    build_rips_filtration,
    compute_persistence,
    to_birth_persistence,
)

__all__ = [
    "PipelineConfig",
    "compute_diagram",
    "diagrams_for_clouds",
    "build_labeled_set",
    "run_sweep",
    "random_gmm",
    "stability_trials",
]

CLASS_NAMES = [s.name.lower() for s in ShapeClass]


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one run needs; encoder kind and codebook type are one field."""

    clouds_per_class: int = 50
    points_per_cloud: int = 100
    noise_sigma: float = 0.1
    homology_dim: int = 1
    max_dim: int = 2
    max_radius: float | None = None  # None = max pairwise distance per cloud
    sample_size: int = 10000
    weighted: bool = True
    encoder: str = "pbow"
    n_words: int = 50
    n_values: tuple[int, ...] = tuple(range(10, 201, 10))
    reg: float | None = None
    classifier: str = "linear"
    epochs: int = 150
    learning_rate: float = 0.5
    classifier_reg: float = 1e-4
    train_fraction: float = 0.8
    repetitions: int = 5
    seed: int = 0
    jobs: int = 1
    out_dir: str = "out"

    def __post_init__(self):
        if self.encoder not in ("pbow", "spbow"):
            raise ValueError(f"unknown encoder {self.encoder!r}")
        if self.homology_dim > self.max_dim:
            raise ValueError("homology_dim cannot exceed max_dim")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "n_values" in doc:
            doc = dict(doc, n_values=tuple(doc["n_values"]))
        return cls(**doc)

    @classmethod
    def from_json(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_json(self, path: str | Path) -> None:
        doc = asdict(self)
        doc["n_values"] = list(doc["n_values"])
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")

    def override(self, **kwargs) -> "PipelineConfig":
        return replace(self, **kwargs)


def enclosing_radius(cloud: PointCloud) -> float:
    """min over vertices of the farthest pairwise distance.

    At this radius the Rips complex contains the star of some vertex over
    every other vertex, hence is a cone: every later cycle dies the moment
    it appears. Truncating there leaves the positive-persistence diagram in
    dimensions 0 and 1 identical to the full-radius one.
    """
    from scipy.spatial.distance import pdist, squareform

    if len(cloud) == 1:
        return 0.0
    return float(squareform(pdist(cloud.points)).max(axis=1).min())


def compute_diagram(
    cloud: PointCloud,
    homology_dim: int = 1,
    max_dim: int = 2,
    max_radius: float | None = None,
) -> Diagram:
    """Rips filtration, reduction, birth-persistence transform for one cloud.

    With the default radius (max pairwise distance) the build is truncated
    at the enclosing radius instead, which provably does not change the
    positive-persistence output in dimensions 0 and 1.
    """
    if max_radius is None and homology_dim <= 1:
        max_radius = max(enclosing_radius(cloud), np.finfo(float).tiny)
    filtration = build_rips_filtration(cloud, max_radius=max_radius, max_dim=max_dim)
    (bd,) = compute_persistence(filtration, dims={homology_dim})
    return to_birth_persistence(bd, infinite_policy="ignore")


def _ph_worker(args) -> np.ndarray:
    points, homology_dim, max_dim, max_radius = args
    d = compute_diagram(PointCloud(points), homology_dim, max_dim, max_radius)
    return d.points


def diagrams_for_clouds(
    clouds: list[PointCloud],
    homology_dim: int = 1,
    max_dim: int = 2,
    max_radius: float | None = None,
    jobs: int = 1,
) -> list[Diagram]:
    """Per-cloud persistence, optionally across processes, order-preserving."""
    work = [(c.points, homology_dim, max_dim, max_radius) for c in clouds]
    if jobs <= 1 or len(clouds) < 2:
        point_sets = [_ph_worker(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            point_sets = list(pool.map(_ph_worker, work, chunksize=1))
    return [Diagram(points=p, homology_dim=homology_dim) for p in point_sets]


def build_labeled_set(cfg: PipelineConfig) -> LabeledDiagramSet:
    """Generate the synthetic dataset and compute one diagram per cloud."""
    labeled_clouds = generate_dataset(
        cfg.clouds_per_class, cfg.points_per_cloud, cfg.noise_sigma, cfg.seed
    )
    diagrams = diagrams_for_clouds(
        [c for c, _ in labeled_clouds],
        homology_dim=cfg.homology_dim,
        max_dim=cfg.max_dim,
        max_radius=cfg.max_radius,
        jobs=cfg.jobs,
    )
    entries = [(d, label) for d, (_, label) in zip(diagrams, labeled_clouds)]
    return LabeledDiagramSet(entries=entries, class_names=CLASS_NAMES)


def run_sweep(
    cfg: PipelineConfig,
    dataset: LabeledDiagramSet | None = None,
    weighted_options: tuple[bool, ...] | None = None,
) -> GridResult:
    """The accuracy-vs-codebook-size experiment on the synthetic dataset."""
    if dataset is None:
        dataset = build_labeled_set(cfg)
    return grid_search(
        dataset,
        n_values=list(cfg.n_values),
        weighted_options=weighted_options or (cfg.weighted,),
        encoder=cfg.encoder,
        split=SplitSpec(
            train_fraction=cfg.train_fraction,
            seed=cfg.seed,
            repetitions=cfg.repetitions,
        ),
        sample_size=cfg.sample_size,
        classifier=cfg.classifier,
        epochs=cfg.epochs,
        learning_rate=cfg.learning_rate,
        reg=cfg.classifier_reg,
    )


def random_gmm(n_components: int, seed: int = 0) -> GmmCodebook:
    """A random but well-conditioned soft codebook, for stability checks."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, n_components + 1))
    means = rng.uniform(0.0, 2.0, size=(n, 2))
    covs = np.empty((n, 2, 2))
    for k in range(n):
        eigs = rng.uniform(0.05, 1.0, size=2)
        ang = rng.uniform(0.0, np.pi)
        rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
        covs[k] = (rot * eigs) @ rot.T
    w = rng.uniform(0.2, 1.0, size=n)
    return GmmCodebook(weights=w / w.sum(), means=means, covariances=covs)


def random_diagram_pair(
    rng: np.random.Generator, max_points: int = 8, scale: float = 2.0
) -> tuple[Diagram, Diagram]:
    """A diagram and a small random perturbation of it, persistences kept > 0."""
    n = int(rng.integers(1, max_points + 1))
    births = rng.uniform(0.0, scale, size=n)
    pers = rng.uniform(0.05 * scale, scale, size=n)
    delta = rng.uniform(-1, 1, size=(n, 2)) * (0.01 * scale)
    b = np.stack([births, pers], axis=1)
    b2 = b + delta
    b2[:, 1] = np.maximum(b2[:, 1], 1e-6)
    return Diagram(points=b), Diagram(points=b2)


def stability_trials(
    cb: GmmCodebook, n_trials: int = 10000, seed: int = 0
) -> dict:
    """Empirical check of the soft-encoding stability bound on one codebook.

    Each trial perturbs a random diagram, computes the exact 1-Wasserstein
    distance and the sup-norm change of the raw encoding, and compares the
    ratio with the certified constant (plus 1e-9 absolute slack).
    """
    cert = stability_certificate(cb)
    rng = np.random.default_rng(seed)
    ratios = np.empty(n_trials)
    violations = 0
    for t in range(n_trials):
        B, B2 = random_diagram_pair(rng)
        w1 = wasserstein(B, B2, q=1.0)
        raw = encode_spbow(B, cb, normalized=False).values
        raw2 = encode_spbow(B2, cb, normalized=False).values
        diff = float(np.abs(raw - raw2).max())
        if diff > cert.constant * w1 + 1e-9:
            violations += 1
        ratios[t] = diff / w1 if w1 > 0 else 0.0
    return {
        "constant": cert.constant,
        "lipschitz": cert.lipschitz.tolist(),
        "trials": n_trials,
        "max_ratio": float(ratios.max()),
        "violations": violations,
        "ratios": ratios,
    }
