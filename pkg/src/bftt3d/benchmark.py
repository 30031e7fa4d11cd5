"""Corruption benchmark: desk-scale protocol, ablations, error reports.

A session generates the synthetic dataset, encodes it once, and caches
per-corruption target features so every arm (main run and the three
ablation axes) reuses the same expensive intermediates.  Errors are
classification error percentages; each report row carries one value per
corruption plus their arithmetic mean.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .cloud import generate_shape
from .config import RunConfig, replace_config
from .corruptions import CORRUPTION_KINDS, CorruptionSpec, corrupt
from .encoder import ENV_THREADS, encode_many
from .errors import ConfigError
from .fusion import fuse_batch, softmax_entropy
from .memory import build_memory
from .pipeline import TestTimeAdapter
from .source import fit_centroids

FIXED_P_GRID = tuple(round(0.1 * i, 1) for i in range(11))
ABLATION_AXES = ("ratio", "subspace", "fusion-ratio")
RATIO_GRID = (0.25, 0.5, 0.75, 1.0)


def _error_percent(predictions: np.ndarray, labels: np.ndarray) -> float:
    return float(100.0 * np.mean(predictions != labels))


@dataclass
class ErrorReport:
    """Per-arm, per-corruption error table plus fusion-weight summaries."""

    arms: dict[str, dict[str, float]]
    corruptions: tuple[str, ...]
    p_summary: dict[str, dict[str, float]]
    config: dict
    notes: tuple[str, ...] = ()
    trace_path: str | None = None

    def mean(self, arm: str) -> float:
        return self.arms[arm]["mean"]

    def to_json(self) -> str:
        payload = {
            "arms": self.arms,
            "corruptions": list(self.corruptions),
            "p_summary": self.p_summary,
            "config": self.config,
            "notes": list(self.notes),
            "trace_path": self.trace_path,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        names = list(self.corruptions) + ["mean"]
        arm_width = max(len(a) for a in self.arms) + 2
        col = max(max(len(n) for n in names) + 2, 8)
        lines = ["".ljust(arm_width) + "".join(n.rjust(col) for n in names)]
        for arm, row in self.arms.items():
            cells = "".join(f"{row[n]:.2f}".rjust(col) for n in names)
            lines.append(arm.ljust(arm_width) + cells)
        return "\n".join(lines) + "\n"


class BenchmarkSession:
    """Caches the dataset, encoded features, memories and source logits."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.encoder_cfg = cfg.encoder_config()
        self.n_jobs = self._resolve_jobs(cfg.n_jobs)
        self.train_labels, self._train_clouds = self._generate_split(0, cfg.train_per_class)
        self.test_labels, self._test_clouds = self._generate_split(1, cfg.test_per_class)
        self._train_features: np.ndarray | None = None
        self._target_features: dict[str, np.ndarray] = {}
        self._memories: dict = {}
        self._source = None
        self._bf_cache: dict = {}
        self._notes: list[str] = []

    @staticmethod
    def _resolve_jobs(n_jobs: int | None) -> int:
        cap = os.environ.get(ENV_THREADS, "").strip()
        cap_value = int(cap) if cap.isdigit() and int(cap) >= 1 else None
        if n_jobs is None:
            n_jobs = cap_value if cap_value is not None else min(os.cpu_count() or 1, 8)
        return max(1, min(n_jobs, cap_value) if cap_value is not None else n_jobs)

    def _sample_seed(self, stream: tuple[int, ...]) -> int:
        return int(np.random.SeedSequence(self.cfg.seed, spawn_key=stream).generate_state(1)[0])

    def _generate_split(self, split_id: int, per_class: int):
        clouds, labels = [], []
        for c, kind in enumerate(self.cfg.classes):
            for i in range(per_class):
                seed = self._sample_seed((split_id, c, i))
                clouds.append(generate_shape(kind, self.cfg.n_points, seed))
                labels.append(c)
        return np.array(labels, dtype=np.int64), clouds

    @property
    def train_features(self) -> np.ndarray:
        if self._train_features is None:
            self._train_features = encode_many(self._train_clouds, self.encoder_cfg, self.n_jobs)
        return self._train_features

    def memory(self, ratio: float):
        if ratio not in self._memories:
            self._memories[ratio] = build_memory(
                self.train_features, self.train_labels, ratio,
                encoder_hash=self.encoder_cfg.digest(),
            )
        return self._memories[ratio]

    @property
    def source_provider(self):
        if self._source is None:
            if self.cfg.source == "centroid":
                self._source = fit_centroids(
                    self.train_features, self.train_labels, self.cfg.temperature
                )
            else:
                # File replay would need one logit file per corruption arm;
                # the benchmark harness is self-contained by design.
                raise ConfigError(
                    "bench/ablate require the centroid source; file replay is "
                    "available through the 'adapt' subcommand"
                )
        return self._source

    def target_features(self, kind: str) -> np.ndarray:
        if kind not in self._target_features:
            kind_id = CORRUPTION_KINDS.index(kind)
            corrupted = []
            for i, cloud in enumerate(self._test_clouds):
                try:
                    spec = CorruptionSpec(kind, self.cfg.severity,
                                          self._sample_seed((100 + kind_id, i)))
                    corrupted.append(corrupt(cloud, spec))
                except Exception as exc:
                    raise RuntimeError(f"corrupting {kind} sample {i}: {exc}") from exc
            try:
                self._target_features[kind] = encode_many(corrupted, self.encoder_cfg, self.n_jobs)
            except Exception as exc:
                raise RuntimeError(f"encoding {kind} targets: {exc}") from exc
        return self._target_features[kind]

    def source_logits(self, kind: str) -> np.ndarray:
        return self.source_provider.predict_logits(self.target_features(kind))

    def adaptation_logits(self, kind: str, run_cfg: RunConfig | None = None, *,
                          ratio=None, method=None) -> np.ndarray:
        """Adaptation-branch logits, cached per distinguishing settings."""
        cfg = run_cfg or self.cfg
        ratio = cfg.memory_ratio if ratio is None else ratio
        method = cfg.subspace_method if method is None else method
        variant = replace_config(cfg, subspace_method=method)
        subspace = variant.subspace_config()
        fusion = variant.fusion_config()
        key = (kind, ratio, subspace, fusion.gamma, fusion.activation)
        if key not in self._bf_cache:
            adapter = TestTimeAdapter(self.memory(ratio), subspace, fusion)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                self._bf_cache[key] = adapter.adaptation_logits(self.target_features(kind))
            for w in caught:
                note = f"{kind}: {w.message}"
                if note not in self._notes:
                    self._notes.append(note)
        return self._bf_cache[key]

    def fused_arm(self, kind: str, run_cfg: RunConfig | None = None, *,
                  ratio=None, method=None, fusion=None):
        """Predictions and weights for one fused arm on one corruption."""
        cfg = run_cfg or self.cfg
        fusion = cfg.fusion_config() if fusion is None else fusion
        variant = replace_config(cfg, gamma=fusion.gamma, activation=fusion.activation)
        l_bf = self.adaptation_logits(kind, variant, ratio=ratio, method=method)
        l_s = self.source_logits(kind)
        fused, p = fuse_batch(l_bf, l_s, fusion)
        return fused.argmax(axis=1), p, l_bf, l_s

    def notes(self) -> tuple[str, ...]:
        return tuple(sorted(self._notes))


def _finish_rows(rows: dict[str, dict[str, float]], corruptions) -> None:
    for row in rows.values():
        row["mean"] = float(np.mean([row[k] for k in corruptions]))


def _p_stats(p: np.ndarray) -> dict[str, float]:
    return {"min": float(p.min()), "median": float(np.median(p)), "max": float(p.max())}


def run_benchmark(cfg: RunConfig, session: BenchmarkSession | None = None) -> ErrorReport:
    """Full protocol: source-only and fused arms over every corruption."""
    session = session or BenchmarkSession(cfg)
    arms: dict[str, dict[str, float]] = {"source-only": {}, "bftt3d": {}}
    p_summary: dict[str, dict[str, float]] = {}
    trace_records: list[dict] = []
    labels = session.test_labels
    for kind in cfg.corruptions:
        l_s = session.source_logits(kind)
        arms["source-only"][kind] = _error_percent(l_s.argmax(axis=1), labels)
        pred, p, l_bf, _ = session.fused_arm(kind, cfg)
        arms["bftt3d"][kind] = _error_percent(pred, labels)
        p_summary[kind] = _p_stats(p)
        if cfg.trace:
            for i in range(len(labels)):
                trace_records.append({
                    "corruption": kind,
                    "index": i,
                    "label": int(labels[i]),
                    "prediction": int(pred[i]),
                    "p": float(p[i]),
                    "entropy_adapt": softmax_entropy(l_bf[i]),
                    "entropy_source": softmax_entropy(l_s[i]),
                })
    _finish_rows(arms, cfg.corruptions)
    if cfg.trace:
        with open(cfg.trace, "w") as fh:
            for record in trace_records:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    return ErrorReport(
        arms=arms, corruptions=cfg.corruptions, p_summary=p_summary,
        config=cfg.to_dict(), notes=session.notes(), trace_path=cfg.trace,
    )


def run_ablation(cfg: RunConfig, axis: str, session: BenchmarkSession | None = None) -> ErrorReport:
    """One ablation axis: prototype ratio, subspace method, or fusion ratio."""
    if axis not in ABLATION_AXES:
        raise ConfigError(f"ablation axis must be one of {ABLATION_AXES}, got {axis!r}")
    session = session or BenchmarkSession(cfg)
    labels = session.test_labels
    arms: dict[str, dict[str, float]] = {"source-only": {}}
    p_summary: dict[str, dict[str, float]] = {}

    if axis == "ratio":
        variants = [(f"bftt3d@ratio={int(r * 100)}%", {"ratio": r}) for r in RATIO_GRID]
    elif axis == "subspace":
        variants = [(f"bftt3d@subspace={m}", {"method": m}) for m in ("none", "tca")]
    else:
        fixed = [
            (f"bftt3d@p={p:.1f}", {"fusion": replace_config(cfg, fusion_mode="fixed", fixed_p=p).fusion_config()})
            for p in FIXED_P_GRID
        ]
        variants = fixed + [("bftt3d@adaptive", {"fusion": replace_config(cfg, fusion_mode="adaptive").fusion_config()})]

    for name, _ in variants:
        arms[name] = {}
    for kind in cfg.corruptions:
        arms["source-only"][kind] = _error_percent(session.source_logits(kind).argmax(axis=1), labels)
        for name, kwargs in variants:
            pred, p, _, _ = session.fused_arm(kind, cfg, **kwargs)
            arms[name][kind] = _error_percent(pred, labels)
            if name.endswith("adaptive"):
                p_summary[kind] = _p_stats(p)
    _finish_rows(arms, cfg.corruptions)
    return ErrorReport(
        arms=arms, corruptions=cfg.corruptions, p_summary=p_summary,
        config=cfg.to_dict(), notes=session.notes(),
    )
