"""Classification harness over feature vectors.

A one-vs-rest linear classifier trained on the regularized hinge loss by
(sub)gradient descent, a k-NN baseline, and the grid search that sweeps
codebook size and weighting, refitting the codebook on each training split.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .bow import fit_bow_encoder
from .datasets import LabeledDiagramSet

__all__ = [
    "SplitSpec",
    "GridRow",
    "GridResult",
    "LinearModel",
    "train_linear",
    "predict",
    "evaluate",
    "knn_classify",
    "stratified_split",
    "grid_search",
]


@dataclass(frozen=True)
class SplitSpec:
    """Train fraction, base seed and number of repeated splits."""

    train_fraction: float = 0.8
    seed: int = 0
    repetitions: int = 5

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train fraction must be in (0, 1)")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


@dataclass(frozen=True)
class GridRow:
    n_words: int
    weighted: bool
    encoder: str
    mean_accuracy: float
    std_accuracy: float
    wall_time_s: float
    accuracies: tuple[float, ...] = ()


@dataclass(frozen=True)
class GridResult:
    rows: list[GridRow]

    def __post_init__(self):
        for r in self.rows:
            if not 0.0 <= r.mean_accuracy <= 1.0:
                raise ValueError("accuracy out of [0, 1]")

    def best(self) -> GridRow:
        return max(self.rows, key=lambda r: r.mean_accuracy)


@dataclass(frozen=True)
class LinearModel:
    """One-vs-rest linear scorer: score = X @ weights.T + bias."""

    weights: np.ndarray  # (n_classes, dim)
    bias: np.ndarray  # (n_classes,)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def _hinge_objective(w, b, X, y_signed, reg):
    margins = np.maximum(0.0, 1.0 - y_signed * (X @ w + b))
    return 0.5 * reg * float(w @ w) + float(margins.mean())


def train_linear(
    X: np.ndarray,
    y: np.ndarray,
    epochs: int = 400,
    learning_rate: float = 0.5,
    reg: float = 1e-3,
    seed: int = 0,
    full_batch: bool = False,
    average: bool = True,
    objective_history: list | None = None,
) -> LinearModel:
    """L2-regularized hinge loss, one binary problem per class.

    Stochastic subgradient descent with a decaying step by default; the
    returned weights are the average over the second half of the epochs
    (``average=False`` keeps the last iterate). ``full_batch`` switches to
    full subgradient steps with a halving safeguard, which makes the
    recorded objective non-increasing; the history then holds one summed
    objective value per epoch.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("need at least 2 classes")
    n, dim = X.shape
    rng = np.random.default_rng(seed)

    W = np.zeros((len(classes), dim))
    B = np.zeros(len(classes))

    if full_batch:
        lr = np.full(len(classes), learning_rate)
        for epoch in range(epochs):
            total = 0.0
            for ci, c in enumerate(classes):
                ys = np.where(y == c, 1.0, -1.0)
                w, b = W[ci], B[ci]
                obj = _hinge_objective(w, b, X, ys, reg)
                active = ys * (X @ w + b) < 1.0
                gw = reg * w - (ys[active, None] * X[active]).sum(axis=0) / n
                gb = -ys[active].sum() / n
                while lr[ci] > 1e-12:
                    w2, b2 = w - lr[ci] * gw, b - lr[ci] * gb
                    if _hinge_objective(w2, b2, X, ys, reg) <= obj:
                        W[ci], B[ci] = w2, b2
                        break
                    lr[ci] *= 0.5
                total += _hinge_objective(W[ci], B[ci], X, ys, reg)
            if objective_history is not None:
                objective_history.append(total)
        return LinearModel(weights=W, bias=B)

    w_sum = np.zeros_like(W)
    b_sum = np.zeros_like(B)
    averaged = 0
    signed = np.where(y[:, None] == classes[None, :], 1.0, -1.0)  # (n, classes)
    for epoch in range(epochs):
        step = learning_rate / (1.0 + epoch * 0.1)
        order = rng.permutation(n)
        for i in order:
            xi = X[i]
            margins = signed[i] * (W @ xi + B)
            W *= 1.0 - step * reg
            active = margins < 1.0
            if active.any():
                W[active] += step * signed[i, active, None] * xi
                B[active] += step * signed[i, active]
        if average and epoch >= epochs // 2:
            w_sum += W
            b_sum += B
            averaged += 1
    if averaged:
        return LinearModel(weights=w_sum / averaged, bias=b_sum / averaged)
    return LinearModel(weights=W, bias=B)


def predict(model: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValueError(f"feature dimension {X.shape} does not match model {model.dim}")
    scores = X @ model.weights.T + model.bias
    return scores.argmax(axis=1)


def evaluate(model: LinearModel, X: np.ndarray, y: np.ndarray) -> float:
    """Fraction of correct argmax predictions on a non-empty test set."""
    y = np.asarray(y, dtype=np.intp)
    if len(y) == 0:
        raise ValueError("empty test set")
    return float((predict(model, X) == y).mean())


def knn_classify(
    train_X: np.ndarray,
    train_y: np.ndarray,
    test_X: np.ndarray,
    test_y: np.ndarray,
    k: int = 1,
) -> float:
    """Euclidean k-NN accuracy, majority vote.

    Vote ties go to the label of the closest neighbor among the tied
    labels. Distance ties resolve to the lower training index.
    """
    train_X = np.asarray(train_X, dtype=np.float64)
    test_X = np.asarray(test_X, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.intp)
    test_y = np.asarray(test_y, dtype=np.intp)
    if k < 1 or k > train_X.shape[0]:
        raise ValueError(f"k={k} out of range for {train_X.shape[0]} train points")
    if len(test_y) == 0:
        raise ValueError("empty test set")

    correct = 0
    for x, target in zip(test_X, test_y):
        d2 = ((train_X - x) ** 2).sum(axis=1)
        nearest = np.argsort(d2, kind="stable")[:k]
        votes = np.bincount(train_y[nearest])
        top = votes.max()
        tied = set(np.nonzero(votes == top)[0])
        choice = next(int(train_y[i]) for i in nearest if int(train_y[i]) in tied)
        correct += choice == target
    return correct / len(test_y)


def stratified_split(
    labels: np.ndarray, train_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split; every class keeps >= 1 sample on each side."""
    labels = np.asarray(labels, dtype=np.intp)
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in np.unique(labels):
        members = np.nonzero(labels == c)[0]
        if len(members) < 2:
            raise ValueError(f"class {c} has fewer than 2 samples")
        perm = rng.permutation(members)
        cut = int(round(train_fraction * len(members)))
        cut = min(max(cut, 1), len(members) - 1)
        train_idx.append(perm[:cut])
        test_idx.append(perm[cut:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))


def grid_search(
    dataset: LabeledDiagramSet,
    n_values: list[int],
    weighted_options: list[bool] = (True,),
    encoder: str = "pbow",
    split: SplitSpec = SplitSpec(),
    sample_size: int = 10000,
    classifier: str = "linear",
    epochs: int = 150,
    learning_rate: float = 0.5,
    reg: float = 1e-4,
) -> GridResult:
    """Accuracy sweep over codebook size and weighting.

    Every repetition draws a fresh stratified split and refits the codebook
    on the training diagrams only; the mean, standard deviation and total
    wall time per configuration are reported.
    """
    labels = dataset.labels
    diagrams = dataset.diagrams
    seeder = np.random.default_rng(split.seed)
    rep_seeds = [int(s) for s in seeder.integers(0, 2**63 - 1, size=split.repetitions)]

    rows = []
    for weighted in weighted_options:
        for n_words in n_values:
            accs = []
            t0 = time.perf_counter()
            for rep_seed in rep_seeds:
                tr, te = stratified_split(labels, split.train_fraction, rep_seed)
                enc = fit_bow_encoder(
                    [diagrams[i] for i in tr],
                    kind=encoder,
                    n_words=n_words,
                    weighted=weighted,
                    sample_size=sample_size,
                    seed=rep_seed,
                )
                Xtr = enc.encode_matrix([diagrams[i] for i in tr])
                Xte = enc.encode_matrix([diagrams[i] for i in te])
                if classifier == "linear":
                    model = train_linear(
                        Xtr, labels[tr], epochs=epochs,
                        learning_rate=learning_rate, reg=reg, seed=rep_seed,
                    )
                    accs.append(evaluate(model, Xte, labels[te]))
                elif classifier == "knn":
                    accs.append(knn_classify(Xtr, labels[tr], Xte, labels[te], k=1))
                else:
                    raise ValueError(f"unknown classifier {classifier!r}")
            wall = time.perf_counter() - t0
            rows.append(
                GridRow(
                    n_words=n_words,
                    weighted=weighted,
                    encoder=encoder,
                    mean_accuracy=float(np.mean(accs)),
                    std_accuracy=float(np.std(accs)),
                    wall_time_s=wall,
                    accuracies=tuple(accs),
                )
            )
    return GridResult(rows=rows)
