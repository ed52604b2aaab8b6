"""File formats: CSV for data, JSON for metadata and structured results.

All writers are deterministic (no timestamps, shortest-roundtrip float
repr), so identical inputs and seeds give byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .classify import GridResult, GridRow
from .codebook import GmmCodebook, KmeansCodebook, SamplingConfig
from .persistence import Diagram, PointCloud

__all__ = [
    "read_point_cloud_csv",
    "write_point_cloud_csv",
    "read_image",
    "read_pgm",
    "write_diagrams_csv",
    "read_diagrams_csv",
    "write_diagrams_json",
    "write_codebook_json",
    "read_codebook_json",
    "write_features_csv",
    "read_features_csv",
    "write_manifest_json",
    "read_manifest_json",
    "write_grid_csv",
    "write_grid_plot_json",
]


class FileFormatError(ValueError):
    """Malformed input file; the message names the offending row."""


def _fmt(x: float) -> str:
    return repr(float(x))


def read_point_cloud_csv(path: str | Path) -> PointCloud:
    """One point per row, d comma-separated coordinates, no header."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise FileFormatError(f"{path}: row {lineno}: non-numeric value {row}")
    if not rows:
        raise FileFormatError(f"{path}: no points found")
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise FileFormatError(f"{path}: inconsistent column counts {sorted(widths)}")
    return PointCloud(points=np.array(rows))


def write_point_cloud_csv(path: str | Path, cloud: PointCloud) -> None:
    with open(path, "w", newline="") as fh:
        for p in cloud.points:
            fh.write(",".join(_fmt(c) for c in p) + "\n")


def read_pgm(path: str | Path) -> np.ndarray:
    """8-bit PGM, ASCII (P2) or binary (P5)."""
    data = Path(path).read_bytes()
    # header tokens (magic, width, height, maxval) allowing # comments
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < 4:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise FileFormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:i])
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FileFormatError(f"{path}: bad PGM header {tokens}")
    if maxval > 255:
        raise FileFormatError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    if magic == b"P2":
        vals = np.array(data[i:].split(), dtype=np.float64)
    elif magic == b"P5":
        vals = np.frombuffer(data[i + 1 : i + 1 + width * height], dtype=np.uint8)
        vals = vals.astype(np.float64)
    else:
        raise FileFormatError(f"{path}: not a PGM file (magic {magic!r})")
    if vals.size != width * height:
        raise FileFormatError(f"{path}: expected {width * height} pixels, got {vals.size}")
    return vals.reshape(height, width)


def read_image(path: str | Path) -> np.ndarray:
    """Grayscale image from a CSV grid of reals or an 8-bit PGM."""
    p = Path(path)
    if p.suffix.lower() == ".pgm":
        return read_pgm(p)
    rows = []
    with open(p, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise FileFormatError(f"{p}: row {lineno}: non-numeric value {row}")
    if not rows or len({len(r) for r in rows}) > 1:
        raise FileFormatError(f"{p}: not a rectangular grid")
    return np.array(rows)


def write_diagrams_csv(path: str | Path, diagrams: list[Diagram]) -> None:
    """Columns (dim, birth, persistence); several dimensions may share a file."""
    with open(path, "w", newline="") as fh:
        fh.write("dim,birth,persistence\n")
        for d in diagrams:
            for b, p in d.points:
                fh.write(f"{d.homology_dim},{_fmt(b)},{_fmt(p)}\n")


def read_diagrams_csv(path: str | Path) -> dict[int, Diagram]:
    """Diagrams keyed by homology dimension."""
    buckets: dict[int, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["dim", "birth", "persistence"]:
            raise FileFormatError(f"{path}: row 1: expected header dim,birth,persistence")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                q, b, p = int(row[0]), float(row[1]), float(row[2])
            except (ValueError, IndexError):
                raise FileFormatError(f"{path}: row {lineno}: malformed entry {row}")
            buckets.setdefault(q, []).append((b, p))
    return {
        q: Diagram(points=np.array(pts).reshape(-1, 2), homology_dim=q)
        for q, pts in buckets.items()
    }


def write_diagrams_json(
    path: str | Path,
    diagrams: list[Diagram],
    source: str = "",
    filtration: str = "",
    infinite_policy: str = "ignore",
) -> None:
    doc = {
        "source": source,
        "filtration": filtration,
        "infinite_policy": infinite_policy,
        "diagrams": [
            {"homology_dim": d.homology_dim, "points": d.points.tolist()}
            for d in diagrams
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def write_codebook_json(
    path: str | Path,
    codebook: KmeansCodebook | GmmCodebook,
    seed: int,
    sampling: SamplingConfig,
) -> None:
    doc: dict = {
        "seed": seed,
        "sampling": {
            "a": sampling.a,
            "b": sampling.b,
            "S": sampling.s,
            "weighted": sampling.weighted,
        },
    }
    if isinstance(codebook, KmeansCodebook):
        doc.update(type="kmeans", N=codebook.n_words, centers=codebook.centers.tolist())
    else:
        doc.update(
            type="gmm",
            N=codebook.n_words,
            components=[
                {
                    "weight": float(w),
                    "mean": m.tolist(),
                    "covariance": c.tolist(),
                }
                for w, m, c in zip(
                    codebook.weights, codebook.means, codebook.covariances
                )
            ],
        )
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_codebook_json(path: str | Path):
    """Returns (codebook, seed, SamplingConfig)."""
    doc = json.loads(Path(path).read_text())
    samp = doc.get("sampling", {})
    cfg = SamplingConfig(
        a=float(samp.get("a", 0.0)),
        b=float(samp.get("b", 1.0)),
        s=int(samp.get("S", 1)),
        weighted=bool(samp.get("weighted", False)),
        seed=int(doc.get("seed", 0)),
    )
    if doc["type"] == "kmeans":
        cb = KmeansCodebook(centers=np.array(doc["centers"]))
    elif doc["type"] == "gmm":
        comps = doc["components"]
        cb = GmmCodebook(
            weights=np.array([c["weight"] for c in comps]),
            means=np.array([c["mean"] for c in comps]),
            covariances=np.array([c["covariance"] for c in comps]),
        )
    else:
        raise FileFormatError(f"{path}: unknown codebook type {doc['type']!r}")
    return cb, int(doc.get("seed", 0)), cfg


def write_features_csv(
    path: str | Path, features: np.ndarray, labels: np.ndarray | None = None
) -> None:
    """One row per diagram, N feature columns, plus a label column if given."""
    features = np.asarray(features, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        header = [f"f{i}" for i in range(features.shape[1])]
        if labels is not None:
            header.append("label")
        fh.write(",".join(header) + "\n")
        for i, row in enumerate(features):
            cells = [_fmt(v) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            fh.write(",".join(cells) + "\n")


def read_features_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray | None]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FileFormatError(f"{path}: empty file")
        has_label = header[-1].strip() == "label"
        n_feat = len(header) - (1 if has_label else 0)
        feats, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise FileFormatError(f"{path}: row {lineno}: expected {len(header)} cells")
            try:
                feats.append([float(c) for c in row[:n_feat]])
                if has_label:
                    labels.append(int(row[-1]))
            except ValueError:
                raise FileFormatError(f"{path}: row {lineno}: non-numeric value {row}")
    X = np.array(feats, dtype=np.float64).reshape(-1, n_feat)
    return X, (np.array(labels, dtype=np.intp) if has_label else None)


def write_manifest_json(
    path: str | Path,
    entries: list[dict],
    class_names: list[str],
    params: dict,
) -> None:
    doc = {"class_names": class_names, "entries": entries, "params": params}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_manifest_json(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text())
    for key in ("class_names", "entries"):
        if key not in doc:
            raise FileFormatError(f"{path}: manifest missing {key!r}")
    return doc


def write_grid_csv(path: str | Path, result: GridResult) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("n_words,weighted,encoder,mean_accuracy,std_accuracy,wall_time_s\n")
        for r in result.rows:
            fh.write(
                f"{r.n_words},{int(r.weighted)},{r.encoder},"
                f"{_fmt(r.mean_accuracy)},{_fmt(r.std_accuracy)},{_fmt(r.wall_time_s)}\n"
            )


def write_grid_plot_json(path: str | Path, result: GridResult) -> None:
    """Plot-ready series: x = codebook size, y = mean accuracy, yerr = std."""
    series: dict[tuple[str, bool], list[GridRow]] = {}
    for r in result.rows:
        series.setdefault((r.encoder, r.weighted), []).append(r)
    doc = {
        "series": [
            {
                "label": f"{enc}{' weighted' if w else ''}",
                "encoder": enc,
                "weighted": w,
                "x": [r.n_words for r in rows],
                "y": [r.mean_accuracy for r in rows],
                "yerr": [r.std_accuracy for r in rows],
            }
            for (enc, w), rows in sorted(series.items())
        ]
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
