import json

import numpy as np
import pytest

from bftt3d import read_cloud, read_features, read_logits
from bftt3d.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """gen-data -> encode -> build-memory artifacts shared by CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert main([
        "gen-data", "--out-dir", str(data), "--classes", "sphere,torus",
        "--train", "6", "--test", "4", "--points", "96", "--seed", "5",
    ]) == 0
    cfg = root / "cfg.toml"
    cfg.write_text(
        "[dataset]\nclasses = [\"sphere\", \"torus\"]\nn_points = 96\n"
        "[encoder]\nd0 = 12\nk_neighbors = 4\n"
    )
    assert main([
        "encode", "--config", str(cfg), "--manifest", str(data / "train.jsonl"),
        "--out", str(root / "train.ftr"),
    ]) == 0
    assert main([
        "encode", "--config", str(cfg), "--manifest", str(data / "test.jsonl"),
        "--out", str(root / "test.ftr"),
    ]) == 0
    assert main([
        "build-memory", "--config", str(cfg), "--features", str(root / "train.ftr"),
        "--manifest", str(data / "train.jsonl"), "--ratio", "0.5",
        "--out", str(root / "mem.bin"),
    ]) == 0
    return root


def test_gen_data_writes_manifests(workspace):
    train = (workspace / "data" / "train.jsonl").read_text().splitlines()
    test = (workspace / "data" / "test.jsonl").read_text().splitlines()
    assert len(train) == 12 and len(test) == 8
    first = json.loads(train[0])
    cloud = read_cloud(workspace / "data" / first["path"])
    assert cloud.shape == (96, 3)


def test_encode_feature_dims(workspace):
    feats = read_features(workspace / "train.ftr")
    assert feats.shape == (12, 12 * 16)


def test_corrupt_roundtrip(workspace, tmp_path):
    src = json.loads((workspace / "data" / "test.jsonl").read_text().splitlines()[0])
    cloud_path = workspace / "data" / src["path"]
    out = tmp_path / "corrupted.pcb"
    assert main([
        "corrupt", "--kind", "rot", "--severity", "5", "--seed", "3",
        "--in", str(cloud_path), "--out", str(out),
    ]) == 0
    assert read_cloud(out).shape == read_cloud(cloud_path).shape


def test_adapt_with_centroid_source(workspace, tmp_path):
    out = tmp_path / "fused.lgt"
    trace = tmp_path / "trace.jsonl"
    code = main([
        "adapt", "--memory", str(workspace / "mem.bin"),
        "--features", str(workspace / "test.ftr"),
        "--source", f"centroid:{workspace / 'train.ftr'}:{workspace / 'data' / 'train.jsonl'}",
        "--subspace", "tca", "--m", "4", "--mu", "0.01", "--kernel", "rbf",
        "--batch", "16", "--gamma", "4",
        "--manifest", str(workspace / "data" / "test.jsonl"),
        "--trace", str(trace), "--out", str(out),
    ])
    assert code == 0
    fused = read_logits(out)
    assert fused.shape == (8, 2)
    records = [json.loads(line) for line in trace.read_text().splitlines()]
    assert len(records) == 8
    assert all(0.0 <= r["p"] <= 1.0 for r in records)


def test_adapt_with_file_source_p_zero_replays(workspace, tmp_path):
    from bftt3d import write_logits

    rng = np.random.default_rng(0)
    logits = rng.normal(size=(8, 2))
    lgt = tmp_path / "source.lgt"
    write_logits(logits, lgt)
    out = tmp_path / "fused.lgt"
    code = main([
        "adapt", "--memory", str(workspace / "mem.bin"),
        "--features", str(workspace / "test.ftr"),
        "--source", f"file:{lgt}", "--fixed-p", "0.0",
        "--subspace", "none", "--out", str(out),
    ])
    assert code == 0
    fused = read_logits(out)
    assert np.array_equal(fused.argmax(axis=1), logits.argmax(axis=1))


def test_bench_and_report_files(workspace, tmp_path):
    cfg = tmp_path / "bench.toml"
    cfg.write_text(
        "seed = 3\n"
        "[dataset]\nclasses = [\"sphere\", \"torus\"]\n"
        "train_per_class = 6\ntest_per_class = 3\nn_points = 96\n"
        "[encoder]\nd0 = 12\nk_neighbors = 4\n"
        "[subspace]\nm = 4\nbatch = 16\n"
        "[corruptions]\nkinds = [\"rot\", \"uniform\"]\nseverity = 5\n"
    )
    out_dir = tmp_path / "reports"
    assert main(["bench", "--config", str(cfg), "--out-dir", str(out_dir)]) == 0
    report = json.loads((out_dir / "bench.json").read_text())
    assert set(report["arms"]) == {"source-only", "bftt3d"}
    assert (out_dir / "bench.txt").exists()


def test_ablate_axis(workspace, tmp_path):
    cfg = tmp_path / "bench.toml"
    cfg.write_text(
        "seed = 3\n"
        "[dataset]\nclasses = [\"sphere\", \"torus\"]\n"
        "train_per_class = 6\ntest_per_class = 3\nn_points = 96\n"
        "[encoder]\nd0 = 12\nk_neighbors = 4\n"
        "[subspace]\nm = 4\nbatch = 16\n"
        "[corruptions]\nkinds = [\"rot\"]\nseverity = 4\n"
    )
    out_dir = tmp_path / "reports"
    assert main(["ablate", "--config", str(cfg), "--axis", "subspace", "--out-dir", str(out_dir)]) == 0
    report = json.loads((out_dir / "ablate-subspace.json").read_text())
    assert "bftt3d@subspace=tca" in report["arms"]


def test_exit_code_on_config_error(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[corruptions]\nseverity = 9\n")
    assert main(["bench", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2


def test_exit_code_on_bad_format(workspace, tmp_path):
    bogus = tmp_path / "x.pcb"
    bogus.write_bytes(b"JUNKJUNKJUNK")
    assert main([
        "corrupt", "--kind", "rot", "--severity", "5",
        "--in", str(bogus), "--out", str(tmp_path / "y.pcb"),
    ]) == 2


def test_init_config_roundtrip(tmp_path):
    path = tmp_path / "default.toml"
    assert main(["init-config", "--out", str(path)]) == 0
    from bftt3d.config import RunConfig, load_run_config

    assert load_run_config(path) == RunConfig()
