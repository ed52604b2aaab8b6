"""Bag-of-words vectorization of persistence diagrams.

Pipeline: point clouds or images -> filtrations -> persistence diagrams in
birth-persistence coordinates -> codebook (k-means or GMM) -> fixed-length
feature vectors (hard or soft assignment) -> classification.
"""

from .bow import BowEncoder, fit_bow_encoder
from .classify import (
    GridResult,
    GridRow,
    LinearModel,
    SplitSpec,
    evaluate,
    grid_search,
    knn_classify,
    predict,
    train_linear,
)
from .codebook import (
    GmmCodebook,
    KmeansCodebook,
    SamplingConfig,
    consolidate,
    fit_gmm,
    fit_kmeans,
    quantile_bounds,
    subsample,
    weight_value,
)
from .datasets import LabeledDiagramSet, ShapeClass, generate_dataset, generate_shape
from .encoding import (
    FeatureVector,
    KDTree,
    StabilityCertificate,
    encode_pbow,
    encode_spbow,
    gaussian_pdf,
    nearest_center,
    normalize,
    stability_certificate,
)
from .metrics import Matching, bottleneck, wasserstein, wasserstein_oracle
from .persistence import (
    BirthDeathDiagram,
    CubicalFiltration,
    Diagram,
    PointCloud,
    SimplicialFiltration,
    build_cubical_filtration,
    build_rips_filtration,
    compute_persistence,
    to_birth_persistence,
)
from .pipeline import PipelineConfig, compute_diagram, diagrams_for_clouds

__version__ = "0.1.0"
