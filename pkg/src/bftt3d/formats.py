"""Binary file formats and dataset manifests.

All binary formats share the layout: 4-byte ASCII magic, u32 header
fields, then a little-endian float32 payload.

=========  ======================================================
Cloud      ``PCB1`` | u32 N | u32 3 | N x 3 f32
Logits     ``LGT1`` | u32 n_samples | u32 n_classes | row-major f32
Features   ``FTR1`` | u32 n | u32 D | row-major f32
=========  ======================================================

Manifests are JSON Lines with fields ``{"path": str, "label": int}``;
paths are resolved relative to the manifest file.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .validation import check_cloud

MAGIC_CLOUD = b"PCB1"
MAGIC_LOGITS = b"LGT1"
MAGIC_FEATURES = b"FTR1"


def _read_header(data: bytes, magic: bytes, path) -> tuple[int, int]:
    if len(data) < 12:
        raise FormatError(f"{path}: file too short for a {magic.decode()} header")
    if data[:4] != magic:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {magic!r}")
    a, b = struct.unpack("<II", data[4:12])
    return a, b


def _read_matrix(path, magic: bytes, *, min_rows: int = 1, min_cols: int = 1) -> np.ndarray:
    data = Path(path).read_bytes()
    n, d = _read_header(data, magic, path)
    if n < min_rows:
        raise FormatError(f"{path}: row count {n} below minimum {min_rows}")
    if d < min_cols:
        raise FormatError(f"{path}: column count {d} below minimum {min_cols}")
    expected = 12 + 4 * n * d
    if len(data) < expected:
        raise FormatError(f"{path}: truncated payload ({len(data)} bytes, expected {expected})")
    if len(data) > expected:
        raise FormatError(f"{path}: trailing bytes beyond declared {n}x{d} payload")
    flat = np.frombuffer(data, dtype="<f4", count=n * d, offset=12)
    return flat.reshape(n, d).astype(np.float64)


def _write_matrix(arr: np.ndarray, path, magic: bytes) -> None:
    n, d = arr.shape
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    Path(path).write_bytes(magic + struct.pack("<II", n, d) + payload)


def read_cloud(path) -> np.ndarray:
    """Read a PCB1 cloud file into an (N, 3) float64 array."""
    arr = _read_matrix(path, MAGIC_CLOUD)
    if arr.shape[1] != 3:
        raise FormatError(f"{path}: cloud dimension must be 3, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{path}: cloud contains non-finite coordinates")
    return arr


def write_cloud(points, path) -> None:
    """Write a cloud as PCB1; coordinates are stored as float32."""
    _write_matrix(check_cloud(points), path, MAGIC_CLOUD)


def read_logits(path) -> np.ndarray:
    """Read an LGT1 file into an (n_samples, n_classes) float64 array."""
    arr = _read_matrix(path, MAGIC_LOGITS, min_rows=0)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{path}: logits contain non-finite entries")
    return arr


def write_logits(logits, path) -> None:
    """Write an (n_samples, n_classes) matrix as LGT1."""
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 2:
        raise FormatError(f"logits must be 2-D, got ndim={arr.ndim}")
    if arr.shape[1] < 1:
        raise FormatError("logit files need at least one class column")
    if not np.all(np.isfinite(arr)):
        raise FormatError("logits contain non-finite entries")
    _write_matrix(arr, path, MAGIC_LOGITS)


def read_features(path) -> np.ndarray:
    """Read an FTR1 file into an (n, D) float64 array."""
    arr = _read_matrix(path, MAGIC_FEATURES, min_rows=0)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{path}: features contain non-finite entries")
    return arr


def write_features(features, path) -> None:
    """Write an (n, D) feature matrix as FTR1."""
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise FormatError(f"features must be (n, D) with D >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FormatError("features contain non-finite entries")
    _write_matrix(arr, path, MAGIC_FEATURES)


@dataclass(frozen=True)
class LabeledDataset:
    """Manifest entries plus the class count and a split tag."""

    entries: tuple[tuple[Path, int], ...]
    class_count: int
    split: str = "source-clean"

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def labels(self) -> np.ndarray:
        return np.array([label for _, label in self.entries], dtype=np.int64)


def write_manifest(entries, path) -> None:
    """Write (path, label) pairs as JSON Lines; paths stored as given."""
    lines = [json.dumps({"path": str(p), "label": int(label)}) for p, label in entries]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_manifest(path) -> list[tuple[Path, int]]:
    """Read a JSONL manifest; relative paths resolve against its directory."""
    base = Path(path).parent
    entries: list[tuple[Path, int]] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
            raw_path, label = record["path"], int(record["label"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: bad manifest line: {exc}") from exc
        p = Path(raw_path)
        entries.append((p if p.is_absolute() else base / p, label))
    return entries


def load_dataset(path, *, split: str = "source-clean", class_count: int | None = None) -> LabeledDataset:
    """Load and validate a manifest: labels in [0, C), every path resolvable."""
    entries = read_manifest(path)
    if not entries:
        raise FormatError(f"{path}: manifest is empty")
    labels = [label for _, label in entries]
    if min(labels) < 0:
        raise FormatError(f"{path}: negative class id in manifest")
    count = class_count if class_count is not None else max(labels) + 1
    if max(labels) >= count:
        raise FormatError(f"{path}: class id {max(labels)} outside [0, {count})")
    for p, _ in entries:
        if not p.exists():
            raise FormatError(f"{path}: referenced file not found: {p}")
    return LabeledDataset(entries=tuple(entries), class_count=count, split=split)
