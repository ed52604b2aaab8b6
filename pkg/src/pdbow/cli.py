"""Command-line pipeline: generate, ph, dist, codebook, encode, classify,
sweep, stability-check.

Data travels as CSV, metadata and results as JSON; report-style commands
also render a figure next to the delimited output. All randomness flows
from explicit seeds, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as pio
from .bow import default_covariance_floor
from .classify import (
    GridResult,
    SplitSpec,
    evaluate,
    knn_classify,
    train_linear,
)
from .codebook import (
    SamplingConfig,
    consolidate,
    fit_gmm,
    fit_kmeans,
    quantile_bounds,
    subsample,
)
from .datasets import generate_dataset
from .encoding import encode_pbow, encode_spbow, normalize
from .metrics import bottleneck, wasserstein
from .persistence import (
    build_cubical_filtration,
    build_rips_filtration,
    compute_persistence,
    to_birth_persistence,
)
from .pipeline import (
    CLASS_NAMES,
    PipelineConfig,
    diagrams_for_clouds,
    random_gmm,
    run_sweep,
    stability_trials,
)
from .plots import plot_grid_result, plot_stability_ratios

ENV_OUT_DIR = "PDBOW_OUT"

PRESETS = {
    "paper-synthetic": dict(clouds_per_class=50, points_per_cloud=500, noise_sigma=0.1),
    "desk-synthetic": dict(clouds_per_class=50, points_per_cloud=100, noise_sigma=0.1),
}


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(ENV_OUT_DIR) or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
    if getattr(args, "preset", None):
        cfg = cfg.override(**PRESETS[args.preset])
    overrides = {}
    for field in (
        "clouds_per_class", "points_per_cloud", "noise_sigma", "seed", "jobs",
        "encoder", "n_words", "sample_size", "epochs", "repetitions",
    ):
        val = getattr(args, field, None)
        if val is not None:
            overrides[field] = val
    if getattr(args, "n_values", None):
        overrides["n_values"] = tuple(args.n_values)
    if getattr(args, "weighted", None) in ("on", "off"):
        overrides["weighted"] = args.weighted == "on"
    if overrides:
        cfg = cfg.override(**overrides)
    return cfg


def _collect_diagram_files(args) -> tuple[list[Path], list[int] | None]:
    """Diagram CSV paths and labels, from a manifest or explicit files."""
    if args.manifest:
        doc = pio.read_manifest_json(args.manifest)
        base = Path(args.manifest).parent
        paths = [base / e["path"] for e in doc["entries"]]
        labels = [int(e["label"]) for e in doc["entries"]]
        return paths, labels
    return [Path(p) for p in args.inputs], None


def _load_diagrams(paths: list[Path], dim: int | None):
    """One diagram per file, all at one homology dimension.

    Without an explicit dimension the common dimension across the files is
    used; files with no surviving features yield empty diagrams.
    """
    from .persistence import Diagram

    loaded = [pio.read_diagrams_csv(p) for p in paths]
    if dim is None:
        seen = {q for by_dim in loaded for q in by_dim}
        if len(seen) > 1:
            raise pio.FileFormatError(
                f"{paths[0].parent}: files mix dimensions {sorted(seen)}; pass --dim"
            )
        dim = seen.pop() if seen else 0
    return [
        by_dim.get(dim, Diagram(points=np.empty((0, 2)), homology_dim=dim))
        for by_dim in loaded
    ]


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    clouds = generate_dataset(
        cfg.clouds_per_class, cfg.points_per_cloud, cfg.noise_sigma, cfg.seed
    )
    entries = []
    for i, (cloud, label) in enumerate(clouds):
        name = f"cloud_{i:04d}_{CLASS_NAMES[label]}.csv"
        pio.write_point_cloud_csv(out / name, cloud)
        entries.append({"path": name, "label": label})
    pio.write_manifest_json(
        out / "manifest.json",
        entries,
        CLASS_NAMES,
        params={
            "clouds_per_class": cfg.clouds_per_class,
            "points_per_cloud": cfg.points_per_cloud,
            "noise_sigma": cfg.noise_sigma,
            "seed": cfg.seed,
        },
    )
    print(f"wrote {len(entries)} clouds and manifest.json to {out}")
    return 0


def cmd_ph(args) -> int:
    out = _out_dir(args)
    dims = sorted(set(args.dim or [1]))
    if args.input.endswith(".json"):  # manifest of point clouds
        doc = pio.read_manifest_json(args.input)
        base = Path(args.input).parent
        clouds = [pio.read_point_cloud_csv(base / e["path"]) for e in doc["entries"]]
        diagram_sets = [
            diagrams_for_clouds(
                clouds, homology_dim=q, max_dim=args.max_dim,
                max_radius=args.max_radius, jobs=args.jobs or 1,
            )
            for q in dims
        ]
        entries = []
        for i, e in enumerate(doc["entries"]):
            name = Path(e["path"]).stem + "_dgm.csv"
            pio.write_diagrams_csv(out / name, [ds[i] for ds in diagram_sets])
            entries.append({"path": name, "label": e["label"]})
        pio.write_manifest_json(
            out / "diagrams_manifest.json", entries, doc["class_names"],
            params={"source": args.input, "dims": dims, "filtration": "rips"},
        )
        print(f"wrote {len(entries)} diagram files to {out}")
        return 0

    if args.filtration == "cubical":
        filtration = build_cubical_filtration(pio.read_image(args.input))
    else:
        cloud = pio.read_point_cloud_csv(args.input)
        filtration = build_rips_filtration(
            cloud, max_radius=args.max_radius, max_dim=args.max_dim
        )
    bds = compute_persistence(filtration, dims=dims)
    diagrams = [to_birth_persistence(bd) for bd in bds]
    target = Path(args.output) if args.output else out / (
        Path(args.input).stem + "_dgm.csv"
    )
    pio.write_diagrams_csv(target, diagrams)
    pio.write_diagrams_json(
        target.with_suffix(".json"), diagrams,
        source=str(args.input), filtration=args.filtration,
    )
    print(f"wrote {target}")
    return 0


def cmd_dist(args) -> int:
    d1 = _load_diagrams([Path(args.diagram_a)], args.dim)[0]
    d2 = _load_diagrams([Path(args.diagram_b)], args.dim)[0]
    if args.bottleneck:
        value = bottleneck(d1, d2)
        print(f"bottleneck: {value!r}")
    else:
        value = wasserstein(d1, d2, q=args.q)
        print(f"wasserstein(q={args.q}): {value!r}")
    return 0


def cmd_codebook(args) -> int:
    out = _out_dir(args)
    paths, _ = _collect_diagram_files(args)
    diagrams = _load_diagrams(paths, args.dim)
    D = consolidate(diagrams)
    if args.weighted == "on":
        a, b = quantile_bounds(D)
        cfg = SamplingConfig(a=a, b=b, s=args.sample_size, weighted=True, seed=args.seed)
    else:
        cfg = SamplingConfig(a=0.0, b=1.0, s=args.sample_size, weighted=False, seed=args.seed)
    points = subsample(D, cfg)
    if args.type == "kmeans":
        cb = fit_kmeans(points, args.n_words, seed=args.seed)
    else:
        reg = args.reg if args.reg is not None else default_covariance_floor(points)
        cb = fit_gmm(points, args.n_words, seed=args.seed, reg=reg)
    target = out / (args.output or "codebook.json")
    pio.write_codebook_json(target, cb, seed=args.seed, sampling=cfg)
    print(f"wrote {target}")
    return 0


def cmd_encode(args) -> int:
    out = _out_dir(args)
    cb, _, _ = pio.read_codebook_json(args.codebook)
    paths, labels = _collect_diagram_files(args)
    diagrams = _load_diagrams(paths, args.dim)
    from .codebook import KmeansCodebook

    rows = []
    for d in diagrams:
        if isinstance(cb, KmeansCodebook):
            fv = encode_pbow(d, cb)
            fv = fv if args.raw else normalize(fv)
        else:
            fv = encode_spbow(d, cb, normalized=not args.raw)
        rows.append(fv.values)
    X = np.stack(rows, axis=0)
    target = out / (args.output or "features.csv")
    pio.write_features_csv(target, X, np.array(labels) if labels is not None else None)
    doc = {"codebook": str(args.codebook), "raw": bool(args.raw),
           "features": X.tolist()}
    if labels is not None:
        doc["labels"] = labels
    target.with_suffix(".json").write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {target}")
    return 0


def cmd_classify(args) -> int:
    out = _out_dir(args)
    Xtr, ytr = pio.read_features_csv(args.train)
    Xte, yte = pio.read_features_csv(args.test)
    if ytr is None or yte is None:
        print("error: feature files must carry a label column", file=sys.stderr)
        return 1
    if args.classifier == "knn":
        acc = knn_classify(Xtr, ytr, Xte, yte, k=args.k)
    else:
        model = train_linear(
            Xtr, ytr, epochs=args.epochs, learning_rate=args.learning_rate,
            reg=args.reg, seed=args.seed,
        )
        acc = evaluate(model, Xte, yte)
    result = {"classifier": args.classifier, "accuracy": acc,
              "train_size": len(ytr), "test_size": len(yte)}
    (out / "classify_result.json").write_text(json.dumps(result, indent=2) + "\n")
    print(f"accuracy: {acc:.4f}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    encoders = ["pbow", "spbow"] if args.encoder == "both" else [args.encoder or cfg.encoder]
    weightings = (
        (True, False) if args.weighted == "both"
        else ((args.weighted == "on",) if args.weighted else (cfg.weighted,))
    )

    from .pipeline import build_labeled_set

    dataset = build_labeled_set(cfg)
    rows = []
    for enc in encoders:
        res = run_sweep(cfg.override(encoder=enc), dataset=dataset,
                        weighted_options=weightings)
        rows.extend(res.rows)
    result = GridResult(rows=rows)

    pio.write_grid_csv(out / "sweep.csv", result)
    pio.write_grid_plot_json(out / "sweep_plot.json", result)
    plot_grid_result(out / "sweep_accuracy.png", result,
                     title=f"{cfg.clouds_per_class}x{cfg.points_per_cloud} synthetic shapes")
    best = result.best()
    print(f"best: {best.encoder} N={best.n_words} weighted={best.weighted} "
          f"accuracy={best.mean_accuracy:.4f} +- {best.std_accuracy:.4f}")
    print(f"wrote sweep.csv, sweep_plot.json, sweep_accuracy.png to {out}")
    return 0


def cmd_stability_check(args) -> int:
    out = _out_dir(args)
    if args.codebook:
        cb, _, _ = pio.read_codebook_json(args.codebook)
    else:
        cb = random_gmm(args.n_components, seed=args.seed)
    report = stability_trials(cb, n_trials=args.trials, seed=args.seed + 1)
    ratios = report.pop("ratios")
    plot_stability_ratios(out / "stability_ratios.png", ratios, report["constant"])
    (out / "stability_report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"certificate C = {report['constant']!r}")
    print(f"max observed ratio over {report['trials']} trials = {report['max_ratio']!r}")
    print(f"violations: {report['violations']}")
    print(f"wrote stability_report.json, stability_ratios.png to {out}")
    return 0 if report["violations"] == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdbow",
        description="Bag-of-words vectorization of persistence diagrams",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        p.add_argument("--out", help=f"output directory (or ${ENV_OUT_DIR})")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        if config:
            p.add_argument("--config", help="pipeline config JSON")

    p = sub.add_parser("generate", help="synthetic shape dataset to CSV + manifest")
    common(p)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--clouds-per-class", type=int, dest="clouds_per_class")
    p.add_argument("--points", type=int, dest="points_per_cloud")
    p.add_argument("--noise", type=float, dest="noise_sigma")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ph", help="persistence diagrams of a cloud, image, or manifest")
    common(p, config=False)
    p.add_argument("input", help="cloud CSV, image CSV/PGM, or cloud manifest JSON")
    p.add_argument("--dim", type=int, action="append",
                   help="homology dimension (repeatable; default 1)")
    p.add_argument("--max-dim", type=int, default=2, choices=(1, 2))
    p.add_argument("--max-radius", type=float, default=None,
                   help="Rips cutoff; default max pairwise distance")
    p.add_argument("--filtration", choices=("rips", "cubical"), default="rips")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_ph)

    p = sub.add_parser("dist", help="distance between two diagram CSVs")
    p.add_argument("diagram_a")
    p.add_argument("diagram_b")
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--bottleneck", action="store_true")
    p.add_argument("--dim", type=int, default=None)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("codebook", help="fit a codebook from diagram files")
    common(p, config=False)
    p.add_argument("inputs", nargs="*", help="diagram CSVs")
    p.add_argument("--manifest", help="diagrams manifest JSON")
    p.add_argument("--type", choices=("kmeans", "gmm"), default="kmeans")
    p.add_argument("--n-words", type=int, default=50, dest="n_words")
    p.add_argument("--sample-size", type=int, default=10000, dest="sample_size")
    p.add_argument("--weighted", choices=("on", "off"), default="on")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--reg", type=float, default=None,
                   help="GMM covariance eigenvalue floor")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_codebook, seed=0)

    p = sub.add_parser("encode", help="encode diagrams against a codebook")
    common(p, config=False)
    p.add_argument("codebook", help="codebook JSON")
    p.add_argument("inputs", nargs="*", help="diagram CSVs")
    p.add_argument("--manifest", help="diagrams manifest JSON")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--raw", action="store_true",
                   help="skip signed-sqrt + L2 normalization")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("classify", help="train/evaluate on feature CSVs")
    common(p, config=False)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--classifier", choices=("linear", "knn"), default="linear")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--learning-rate", type=float, default=0.5, dest="learning_rate")
    p.add_argument("--reg", type=float, default=1e-4)
    p.set_defaults(func=cmd_classify, seed=0)

    p = sub.add_parser("sweep", help="accuracy vs codebook size experiment")
    common(p)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--clouds-per-class", type=int, dest="clouds_per_class")
    p.add_argument("--points", type=int, dest="points_per_cloud")
    p.add_argument("--noise", type=float, dest="noise_sigma")
    p.add_argument("--encoder", choices=("pbow", "spbow", "both"))
    p.add_argument("--weighted", choices=("on", "off", "both"))
    p.add_argument("--n-values", type=int, nargs="+", dest="n_values")
    p.add_argument("--sample-size", type=int, dest="sample_size")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stability-check",
                       help="verify the soft-encoding stability bound empirically")
    common(p, config=False)
    p.add_argument("--codebook", help="GMM codebook JSON; default random")
    p.add_argument("--n-components", type=int, default=5, dest="n_components")
    p.add_argument("--trials", type=int, default=10000)
    p.set_defaults(func=cmd_stability_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None:
        args.seed = 0
    try:
        return args.func(args)
    except pio.FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
