"""Manifest-driven batch inference writing LGT1 logits plus a sidecar."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .formats import ExportFormatError, read_manifest, read_cloud, write_logits
from .model import load_model


class ExportError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExportJob:
    model: str
    manifest: str
    out: str
    device: str = "cpu"
    expected_classes: int | None = None
    batch_size: int = 32


def _batched(clouds: list[np.ndarray], batch_size: int):
    """Consecutive runs of equally-sized clouds, capped at batch_size."""
    start = 0
    while start < len(clouds):
        size = len(clouds[start])
        stop = start
        while stop < len(clouds) and stop - start < batch_size and len(clouds[stop]) == size:
            stop += 1
        yield start, np.stack(clouds[start:stop])
        start = stop


def run_export(job: ExportJob) -> dict:
    """Run the model over every manifest cloud, in manifest order.

    Writes the LGT1 file and a ``<out>.json`` sidecar; returns the
    sidecar payload.
    """
    model, checksum = load_model(job.model, job.device)
    if job.expected_classes is not None and model.n_classes != job.expected_classes:
        raise ExportError(
            f"model emits {model.n_classes} classes, expected {job.expected_classes}"
        )
    entries = read_manifest(job.manifest)
    clouds = []
    for path, _ in entries:
        try:
            clouds.append(read_cloud(path))
        except (OSError, ExportFormatError) as exc:
            raise ExportError(f"manifest entry {path}: {exc}") from exc

    logits = np.zeros((len(clouds), model.n_classes), dtype=np.float32)
    for start, batch in _batched(clouds, job.batch_size):
        out = np.asarray(model.predict_batch(batch), dtype=np.float32)
        if out.shape != (len(batch), model.n_classes):
            raise ExportError(f"model returned shape {out.shape} for a {len(batch)}-batch")
        logits[start : start + len(batch)] = out

    write_logits(logits, job.out)
    sidecar = {
        "model": job.model,
        "checksum": checksum,
        "n_classes": model.n_classes,
        "n_samples": len(clouds),
        "normalization": "clouds consumed exactly as stored in PCB1 (unit sphere)",
    }
    Path(str(job.out) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return sidecar
