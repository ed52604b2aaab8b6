"""File-format round-trips and end-to-end CLI runs on tiny inputs."""

import json

import numpy as np
import pytest

from pdbow import io as pio
from pdbow.cli import main
from pdbow.classify import GridResult, GridRow
from pdbow.codebook import GmmCodebook, KmeansCodebook, SamplingConfig
from pdbow.persistence import Diagram, PointCloud


def dgm(*pts):
    return Diagram(points=np.array(pts, dtype=float).reshape(-1, 2))


# ------------------------------------------------------------------- formats

def test_point_cloud_roundtrip(tmp_path):
    cloud = PointCloud(np.array([[0.5, 1.25, -3.0], [1e-9, 2.0, 4.0]]))
    path = tmp_path / "cloud.csv"
    pio.write_point_cloud_csv(path, cloud)
    back = pio.read_point_cloud_csv(path)
    assert np.array_equal(back.points, cloud.points)


def test_point_cloud_error_names_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1.0,2.0\n1.0,oops\n")
    with pytest.raises(pio.FileFormatError, match="row 2"):
        pio.read_point_cloud_csv(path)


def test_diagram_roundtrip(tmp_path):
    d0 = dgm((0, 1), (0.25, 0.5))
    d1 = Diagram(points=np.array([[1.0, 0.4142]]), homology_dim=1)
    path = tmp_path / "dgm.csv"
    pio.write_diagrams_csv(path, [d0, d1])
    back = pio.read_diagrams_csv(path)
    assert set(back) == {0, 1}
    assert np.array_equal(back[0].points, d0.points)
    assert np.array_equal(back[1].points, d1.points)


def test_diagram_header_enforced(tmp_path):
    path = tmp_path / "nohdr.csv"
    path.write_text("0,0.0,1.0\n")
    with pytest.raises(pio.FileFormatError, match="row 1"):
        pio.read_diagrams_csv(path)


def test_pgm_ascii_and_binary(tmp_path):
    ascii_path = tmp_path / "img.pgm"
    ascii_path.write_bytes(b"P2\n# comment\n3 2\n255\n0 1 2\n3 4 5\n")
    img = pio.read_pgm(ascii_path)
    assert img.shape == (2, 3) and img[1, 2] == 5
    bin_path = tmp_path / "img5.pgm"
    bin_path.write_bytes(b"P5\n3 2\n255\n" + bytes([0, 1, 2, 3, 4, 5]))
    img5 = pio.read_image(bin_path)
    assert np.array_equal(img5, img)


def test_image_csv(tmp_path):
    path = tmp_path / "img.csv"
    path.write_text("1.0,2.0\n3.5,4.0\n")
    img = pio.read_image(path)
    assert img.shape == (2, 2) and img[1, 0] == 3.5


def test_codebook_json_roundtrip(tmp_path):
    cfg = SamplingConfig(a=0.1, b=0.9, s=100, weighted=True, seed=3)
    km = KmeansCodebook(centers=np.array([[0.0, 1.0], [2.0, 3.0]]))
    path = tmp_path / "cb.json"
    pio.write_codebook_json(path, km, seed=3, sampling=cfg)
    back, seed, cfg2 = pio.read_codebook_json(path)
    assert isinstance(back, KmeansCodebook)
    assert np.array_equal(back.centers, km.centers)
    assert seed == 3 and cfg2.s == 100 and cfg2.weighted

    doc = json.loads(path.read_text())
    assert doc["type"] == "kmeans" and doc["N"] == 2
    assert set(doc["sampling"]) == {"a", "b", "S", "weighted"}

    gm = GmmCodebook(
        weights=np.array([0.4, 0.6]),
        means=np.array([[0.0, 0.0], [1.0, 1.0]]),
        covariances=np.stack([np.eye(2), np.eye(2) * 2]),
    )
    path2 = tmp_path / "gm.json"
    pio.write_codebook_json(path2, gm, seed=4, sampling=cfg)
    back2, _, _ = pio.read_codebook_json(path2)
    assert isinstance(back2, GmmCodebook)
    assert np.allclose(back2.covariances, gm.covariances)


def test_features_roundtrip(tmp_path):
    X = np.array([[0.1, 0.2, 0.7], [1.0, 0.0, 0.0]])
    y = np.array([2, 5])
    path = tmp_path / "features.csv"
    pio.write_features_csv(path, X, y)
    X2, y2 = pio.read_features_csv(path)
    assert np.array_equal(X, X2) and np.array_equal(y, y2)
    pio.write_features_csv(path, X)  # no labels
    X3, y3 = pio.read_features_csv(path)
    assert y3 is None and np.array_equal(X3, X)


def test_grid_outputs(tmp_path):
    res = GridResult(rows=[
        GridRow(10, True, "pbow", 0.9, 0.02, 1.5, (0.9, 0.9)),
        GridRow(20, True, "pbow", 0.95, 0.01, 1.7, (0.95, 0.95)),
    ])
    pio.write_grid_csv(tmp_path / "grid.csv", res)
    pio.write_grid_plot_json(tmp_path / "grid.json", res)
    lines = (tmp_path / "grid.csv").read_text().splitlines()
    assert lines[0].startswith("n_words,weighted,encoder")
    assert len(lines) == 3
    doc = json.loads((tmp_path / "grid.json").read_text())
    assert doc["series"][0]["x"] == [10, 20]
    assert doc["series"][0]["yerr"] == [0.02, 0.01]


# ----------------------------------------------------------------------- CLI

def run_cli(*argv):
    return main([str(a) for a in argv])


def test_cli_full_pipeline(tmp_path):
    out = tmp_path / "run"
    assert run_cli("generate", "--clouds-per-class", 2, "--points", 16,
                   "--noise", 0.05, "--seed", 1, "--out", out) == 0
    manifest = out / "manifest.json"
    assert manifest.exists()
    doc = json.loads(manifest.read_text())
    assert len(doc["entries"]) == 12

    assert run_cli("ph", manifest, "--dim", 1, "--max-dim", 2, "--out", out) == 0
    dmanifest = out / "diagrams_manifest.json"
    assert dmanifest.exists()

    assert run_cli("codebook", "--manifest", dmanifest, "--type", "kmeans",
                   "--n-words", 3, "--sample-size", 50, "--out", out,
                   "--seed", 2) == 0
    assert run_cli("encode", out / "codebook.json", "--manifest", dmanifest,
                   "--out", out) == 0
    X, y = pio.read_features_csv(out / "features.csv")
    assert X.shape == (12, 3) and len(y) == 12

    # split features by hand into train/test files for classify
    pio.write_features_csv(out / "train.csv", X[:8], y[:8])
    pio.write_features_csv(out / "test.csv", X[8:], y[8:])
    assert run_cli("classify", "--train", out / "train.csv",
                   "--test", out / "test.csv", "--classifier", "knn",
                   "--out", out) == 0
    result = json.loads((out / "classify_result.json").read_text())
    assert 0.0 <= result["accuracy"] <= 1.0


def test_cli_ph_single_cloud_and_dist(tmp_path):
    cloud = PointCloud(np.array([[0, 0], [1, 0], [0, 1], [1, 1.0]]))
    pio.write_point_cloud_csv(tmp_path / "sq.csv", cloud)
    assert run_cli("ph", tmp_path / "sq.csv", "--dim", 1,
                   "-o", tmp_path / "sq_dgm.csv", "--out", tmp_path) == 0
    dgms = pio.read_diagrams_csv(tmp_path / "sq_dgm.csv")
    assert np.allclose(dgms[1].points, [[1.0, np.sqrt(2) - 1]])
    meta = json.loads((tmp_path / "sq_dgm.json").read_text())
    assert meta["filtration"] == "rips" and meta["infinite_policy"] == "ignore"

    pio.write_diagrams_csv(tmp_path / "a.csv", [dgm((0, 2))])
    pio.write_diagrams_csv(tmp_path / "b.csv", [dgm((0, 1))])
    assert run_cli("dist", tmp_path / "a.csv", tmp_path / "b.csv", "--q", 1) == 0
    assert run_cli("dist", tmp_path / "a.csv", tmp_path / "b.csv",
                   "--bottleneck") == 0


def test_cli_ph_cubical(tmp_path):
    (tmp_path / "img.csv").write_text("1,1,1\n1,9,1\n1,1,1\n")
    assert run_cli("ph", tmp_path / "img.csv", "--filtration", "cubical",
                   "--dim", 1, "-o", tmp_path / "img_dgm.csv",
                   "--out", tmp_path) == 0
    dgms = pio.read_diagrams_csv(tmp_path / "img_dgm.csv")
    assert np.allclose(dgms[1].points, [[1.0, 8.0]])


def test_cli_sweep_tiny(tmp_path):
    out = tmp_path / "sweep"
    assert run_cli("sweep", "--clouds-per-class", 3, "--points", 14,
                   "--noise", 0.05, "--n-values", 2, 3, "--repetitions", 2,
                   "--epochs", 20, "--encoder", "pbow", "--weighted", "on",
                   "--sample-size", 50, "--seed", 3, "--out", out) == 0
    assert (out / "sweep.csv").exists()
    assert (out / "sweep_plot.json").exists()
    assert (out / "sweep_accuracy.png").exists()


def test_cli_stability_check_tiny(tmp_path):
    out = tmp_path / "stab"
    assert run_cli("stability-check", "--n-components", 3, "--trials", 60,
                   "--seed", 5, "--out", out) == 0
    report = json.loads((out / "stability_report.json").read_text())
    assert report["violations"] == 0
    assert report["max_ratio"] <= report["constant"] * (1 + 1e-6) + 1e-9
    assert (out / "stability_ratios.png").exists()


def test_cli_error_paths(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("dim,birth,persistence\n0,0.0,nope\n")
    good = tmp_path / "good.csv"
    pio.write_diagrams_csv(good, [dgm((0, 1))])
    assert run_cli("dist", bad, good) == 1
    with pytest.raises(SystemExit) as exc:
        run_cli("dist", good, good, "--nonsense-flag")
    assert exc.value.code == 2
    assert run_cli("ph", tmp_path / "missing.csv") == 1


def test_cli_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("PDBOW_OUT", str(tmp_path / "envout"))
    cloud = PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    pio.write_point_cloud_csv(tmp_path / "tri.csv", cloud)
    assert run_cli("ph", tmp_path / "tri.csv", "--dim", 0) == 0
    assert (tmp_path / "envout" / "tri_dgm.csv").exists()


def test_cli_idempotent_outputs(tmp_path):
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert run_cli("generate", "--clouds-per-class", 1, "--points", 10,
                       "--seed", 9, "--out", out) == 0
    a = (tmp_path / "r1" / "manifest.json").read_bytes()
    b = (tmp_path / "r2" / "manifest.json").read_bytes()
    assert a == b
    c1 = sorted((tmp_path / "r1").glob("cloud_*.csv"))
    c2 = sorted((tmp_path / "r2").glob("cloud_*.csv"))
    for f1, f2 in zip(c1, c2):
        assert f1.read_bytes() == f2.read_bytes()
