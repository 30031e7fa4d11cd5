"""Binary cloud/logit formats and manifests, as consumed downstream.

Cloud: ``PCB1`` | u32 N | u32 3 | N x 3 f32 LE.
Logits: ``LGT1`` | u32 n_samples | u32 n_classes | row-major f32 LE.
Manifest: JSON Lines ``{"path": str, "label": int}``, paths relative to
the manifest file.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np


class ExportFormatError(ValueError):
    pass


def read_cloud(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"PCB1":
        raise ExportFormatError(f"{path}: not a PCB1 cloud file")
    n, dim = struct.unpack("<II", data[4:12])
    if dim != 3 or n < 1:
        raise ExportFormatError(f"{path}: bad cloud dimensions {n}x{dim}")
    expected = 12 + 12 * n
    if len(data) != expected:
        raise ExportFormatError(f"{path}: payload size {len(data)} != {expected}")
    return np.frombuffer(data, dtype="<f4", count=n * 3, offset=12).reshape(n, 3).astype(np.float32)


def write_logits(logits: np.ndarray, path) -> None:
    arr = np.asarray(logits, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ExportFormatError(f"logits must be (n, C) with C >= 1, got {arr.shape}")
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    Path(path).write_bytes(b"LGT1" + struct.pack("<II", *arr.shape) + payload)


def read_manifest(path) -> list[tuple[Path, int]]:
    base = Path(path).parent
    entries = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
            raw, label = record["path"], int(record["label"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ExportFormatError(f"{path}:{lineno}: bad manifest line: {exc}") from exc
        p = Path(raw)
        entries.append((p if p.is_absolute() else base / p, label))
    return entries
