"""Command-line harness.

Subcommands: gen-data, corrupt, encode, build-memory, adapt, bench,
ablate, init-config.  Exit codes: 0 success, 2 configuration/format
error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .benchmark import ABLATION_AXES, BenchmarkSession, run_ablation, run_benchmark
from .cloud import SHAPE_KINDS, generate_shape
from .config import load_run_config, write_default_config
from .corruptions import CORRUPTION_KINDS, CorruptionSpec, corrupt
from .encoder import EncoderConfig, encode_many
from .errors import ConfigError, FormatError, NumericError
from .formats import (
    read_cloud,
    read_features,
    read_manifest,
    write_cloud,
    write_features,
    write_logits,
    write_manifest,
)
from .fusion import FusionConfig, fuse_batch, softmax_entropy
from .memory import build_memory, load_memory, save_memory
from .pipeline import SubspaceConfig, TestTimeAdapter
from .source import FileLogitProvider, parse_source_spec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _encoder_from_args(args) -> EncoderConfig:
    if args.config:
        cfg = load_run_config(args.config)
        return cfg.encoder_config()
    return EncoderConfig()


def cmd_init_config(args) -> int:
    write_default_config(args.out)
    print(f"wrote default config to {args.out}")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    classes = args.classes.split(",")
    unknown = [c for c in classes if c not in SHAPE_KINDS]
    if unknown:
        raise ConfigError(f"unknown classes {unknown}; known: {SHAPE_KINDS}")
    for split_id, (split, per_class) in enumerate((("train", args.train), ("test", args.test))):
        entries = []
        for label, kind in enumerate(classes):
            for i in range(per_class):
                seed = int(np.random.SeedSequence(
                    args.seed, spawn_key=(split_id, label, i)
                ).generate_state(1)[0])
                name = f"{split}_{kind}_{i:04d}.pcb"
                write_cloud(generate_shape(kind, args.points, seed), out_dir / name)
                entries.append((name, label))
        write_manifest(entries, out_dir / f"{split}.jsonl")
        print(f"{split}: {len(entries)} clouds -> {out_dir / (split + '.jsonl')}")
    return EXIT_OK


def cmd_corrupt(args) -> int:
    cloud = read_cloud(args.input)
    spec = CorruptionSpec(args.kind, args.severity, args.seed)
    write_cloud(corrupt(cloud, spec), args.out)
    print(f"{args.kind}@{args.severity} -> {args.out}")
    return EXIT_OK


def cmd_encode(args) -> int:
    cfg = _encoder_from_args(args)
    entries = read_manifest(args.manifest)
    clouds = [read_cloud(p) for p, _ in entries]
    features = encode_many(clouds, cfg, n_jobs=args.jobs)
    write_features(features, args.out)
    print(f"encoded {len(clouds)} clouds (D={cfg.feature_dim}) -> {args.out}")
    return EXIT_OK


def cmd_build_memory(args) -> int:
    features = read_features(args.features)
    labels = np.array([label for _, label in read_manifest(args.manifest)], dtype=np.int64)
    if len(labels) != len(features):
        raise ConfigError("manifest length does not match feature rows")
    cfg = _encoder_from_args(args)
    memory = build_memory(features, labels, args.ratio, encoder_hash=cfg.digest())
    save_memory(memory, args.out)
    print(f"memory: {memory.n_prototypes} prototypes x {memory.feature_dim} dims -> {args.out}")
    return EXIT_OK


def cmd_adapt(args) -> int:
    memory = load_memory(args.memory)
    target = read_features(args.features)
    provider = parse_source_spec(args.source, temperature=args.temperature)
    if isinstance(provider, FileLogitProvider):
        if provider.n_samples != len(target):
            raise ConfigError(
                f"logit file has {provider.n_samples} rows, features have {len(target)}"
            )
        source_logits = provider.logits_matrix()
    else:
        source_logits = provider.predict_logits(target)

    subspace = SubspaceConfig(
        method=args.subspace, n_components=args.m, mu=args.mu,
        kernel=args.kernel, batch_size=args.batch,
    )
    fusion = FusionConfig(
        gamma=args.gamma,
        mode="fixed" if args.fixed_p is not None else "adaptive",
        fixed_p=args.fixed_p if args.fixed_p is not None else 0.5,
        fuse_space=args.fuse_space,
    )
    adapter = TestTimeAdapter(memory, subspace, fusion)
    fused, p, l_bf = adapter.predict_logits(target, source_logits)
    write_logits(fused, args.out)
    print(f"fused logits for {len(target)} samples -> {args.out}")

    if args.trace:
        with open(args.trace, "w") as fh:
            for i in range(len(target)):
                fh.write(json.dumps({
                    "index": i,
                    "p": float(p[i]),
                    "prediction": int(fused[i].argmax()),
                    "entropy_adapt": softmax_entropy(l_bf[i]),
                    "entropy_source": softmax_entropy(source_logits[i]),
                    "logits": [float(v) for v in fused[i]],
                }, sort_keys=True) + "\n")
        print(f"trace -> {args.trace}")

    if args.manifest:
        labels = np.array([label for _, label in read_manifest(args.manifest)])
        if len(labels) != len(target):
            raise ConfigError("manifest length does not match feature rows")
        error = 100.0 * np.mean(fused.argmax(axis=1) != labels)
        print(f"classification error: {error:.2f}%")
    return EXIT_OK


def _overrides_from(args) -> dict:
    return {
        "seed": args.seed,
        "n_jobs": args.jobs,
        "trace": args.trace,
        "severity": args.severity,
        "corruptions": tuple(args.corruptions.split(",")) if args.corruptions else None,
    }


def _emit_report(report, out_dir: Path, stem: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f"{stem}.json"
    text_path = out_dir / f"{stem}.txt"
    json_path.write_text(report.to_json())
    text_path.write_text(report.to_text())
    print(report.to_text())
    print(f"report -> {json_path}")


def cmd_bench(args) -> int:
    cfg = load_run_config(args.config, _overrides_from(args))
    report = run_benchmark(cfg)
    _emit_report(report, Path(args.out_dir), "bench")
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = load_run_config(args.config, _overrides_from(args))
    session = BenchmarkSession(cfg)
    for axis in args.axis.split(","):
        axis = axis.strip()
        report = run_ablation(cfg, axis, session)
        _emit_report(report, Path(args.out_dir), f"ablate-{axis}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bftt3d",
        description="Backpropagation-free test-time adaptation benchmark harness",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-config", help="write the default TOML config")
    p.add_argument("--out", default="bftt3d.toml")
    p.set_defaults(func=cmd_init_config)

    p = sub.add_parser("gen-data", help="generate synthetic shape datasets")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--classes", default=",".join(SHAPE_KINDS))
    p.add_argument("--train", type=int, default=100)
    p.add_argument("--test", type=int, default=50)
    p.add_argument("--points", type=int, default=1024)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("corrupt", help="corrupt a single cloud file")
    p.add_argument("--kind", required=True, choices=CORRUPTION_KINDS)
    p.add_argument("--severity", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("encode", help="encode manifest clouds into features")
    p.add_argument("--config", help="TOML config supplying encoder settings")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("build-memory", help="select prototypes from features")
    p.add_argument("--config", help="TOML config supplying encoder settings")
    p.add_argument("--features", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratio", type=float, default=0.25)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_memory)

    p = sub.add_parser("adapt", help="adapt target features against a memory")
    p.add_argument("--memory", required=True)
    p.add_argument("--features", required=True, help="target FTR1 file")
    p.add_argument("--source", required=True, help="file:<lgt> or centroid:<ftr>:<jsonl>")
    p.add_argument("--subspace", choices=("tca", "none"), default="tca")
    p.add_argument("--m", type=int, default=150)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--kernel", choices=("linear", "rbf"), default="linear")
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--gamma", type=float, default=100.0)
    p.add_argument("--fixed-p", type=float, default=None,
                   help="fixed fusion weight; omit for adaptive")
    p.add_argument("--fuse-space", choices=("probability", "raw"), default="probability")
    p.add_argument("--temperature", type=float, default=0.04)
    p.add_argument("--manifest", help="labels for an accuracy printout")
    p.add_argument("--trace", help="JSONL per-sample fusion trace")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_adapt)

    for name, func in (("bench", cmd_bench), ("ablate", cmd_ablate)):
        p = sub.add_parser(name, help=f"run the {name} protocol")
        p.add_argument("--config", help="TOML run config")
        p.add_argument("--out-dir", default="reports")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--trace", default=None)
        p.add_argument("--severity", type=int, default=None)
        p.add_argument("--corruptions", default=None, help="comma-separated kinds")
        if name == "ablate":
            p.add_argument("--axis", required=True,
                           help=f"comma-separated from {ABLATION_AXES}")
        p.set_defaults(func=func)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
