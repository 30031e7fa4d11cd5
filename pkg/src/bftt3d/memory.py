"""Static prototype memory built by nearest-mean selection.

For each class the memory keeps the ``ceil(ratio * n_c)`` features
closest (Euclidean) to the class mean computed over *all* features of
that class, so every stored prototype is at least as close to the mean
as every discarded one.  The memory is immutable once built.

File format ``MEM1``: magic | u32 hash_len | encoder-config hash |
u32 n_s | u32 D | u32 C | f64 ratio | features (n_s x D f64 LE) |
one-hot labels (n_s x C f64 LE) | class means (C x D f64 LE).
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, MemoryCorruptionError
from .validation import check_features, check_labels

MAGIC_MEMORY = b"MEM1"


@dataclass(frozen=True)
class PrototypeMemory:
    features: np.ndarray  # (n_s, D)
    labels: np.ndarray  # (n_s, C) one-hot
    class_means: np.ndarray  # (C, D) means over the full per-class sets
    ratio: float
    encoder_hash: bytes = b""

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen(self.features))
        object.__setattr__(self, "labels", _frozen(self.labels))
        object.__setattr__(self, "class_means", _frozen(self.class_means))
        self.validate()

    @property
    def n_prototypes(self) -> int:
        return self.features.shape[0]

    @property
    def n_classes(self) -> int:
        return self.labels.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def class_counts(self) -> np.ndarray:
        return self.labels.sum(axis=0)

    def validate(self) -> None:
        if self.features.ndim != 2 or self.labels.ndim != 2 or self.class_means.ndim != 2:
            raise MemoryCorruptionError("memory matrices must be 2-D")
        if self.labels.shape[0] != self.features.shape[0]:
            raise MemoryCorruptionError("label rows do not match feature rows")
        if self.class_means.shape != (self.labels.shape[1], self.features.shape[1]):
            raise MemoryCorruptionError("class-mean matrix has wrong shape")
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.class_means))):
            raise MemoryCorruptionError("memory contains non-finite values")
        if not np.isin(self.labels, (0.0, 1.0)).all():
            raise MemoryCorruptionError("label matrix entries must be 0 or 1")
        if not np.array_equal(self.labels.sum(axis=1), np.ones(len(self.labels))):
            raise MemoryCorruptionError("every label row must sum to exactly 1")
        if not 0.0 < self.ratio <= 1.0:
            raise MemoryCorruptionError(f"ratio must be in (0, 1], got {self.ratio}")
        if (self.class_counts < 1).any():
            raise MemoryCorruptionError("every class needs at least one prototype")

    def state_hash(self) -> str:
        h = hashlib.sha256()
        for arr in (self.features, self.labels, self.class_means):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(struct.pack("<d", self.ratio))
        h.update(self.encoder_hash)
        return h.hexdigest()


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


def build_memory(features, labels, ratio: float, *, encoder_hash: bytes = b"") -> PrototypeMemory:
    """Select per-class prototypes nearest to the full-class mean.

    ``features`` is (n, D), ``labels`` integer class ids.  Per class,
    ``ceil(ratio * n_c)`` rows are kept, ordered by ascending distance to
    the class mean with index tie-break.  Raises on empty classes.
    """
    X = check_features(features)
    y = check_labels(labels)
    if len(y) != len(X):
        raise ValueError("labels must align with features")
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    n_classes = int(y.max()) + 1 if len(y) else 0
    counts = np.bincount(y, minlength=n_classes)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise ValueError(f"class {empty[0]} has no features")

    rows, row_labels = [], []
    means = np.empty((n_classes, X.shape[1]))
    for c in range(n_classes):
        members = np.flatnonzero(y == c)
        class_feats = X[members]
        mean = class_feats.mean(axis=0)
        means[c] = mean
        dist = np.sqrt(((class_feats - mean) ** 2).sum(axis=1))
        order = np.argsort(dist, kind="stable")
        keep = order[: int(np.ceil(ratio * len(members)))]
        rows.append(class_feats[keep])
        row_labels.extend([c] * len(keep))

    selected = np.vstack(rows)
    onehot = np.zeros((len(selected), n_classes))
    onehot[np.arange(len(selected)), row_labels] = 1.0
    return PrototypeMemory(
        features=selected, labels=onehot, class_means=means, ratio=float(ratio),
        encoder_hash=bytes(encoder_hash),
    )


def save_memory(memory: PrototypeMemory, path) -> None:
    """Persist a memory as MEM1."""
    n, d = memory.features.shape
    c = memory.n_classes
    blob = bytearray()
    blob += MAGIC_MEMORY
    blob += struct.pack("<I", len(memory.encoder_hash))
    blob += memory.encoder_hash
    blob += struct.pack("<III", n, d, c)
    blob += struct.pack("<d", memory.ratio)
    blob += np.ascontiguousarray(memory.features, dtype="<f8").tobytes()
    blob += np.ascontiguousarray(memory.labels, dtype="<f8").tobytes()
    blob += np.ascontiguousarray(memory.class_means, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(blob))


def load_memory(path, *, expected_encoder_hash: bytes | None = None) -> PrototypeMemory:
    """Load a MEM1 file, revalidating every checkable invariant."""
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise FormatError(f"{path}: file too short for a MEM1 header")
    if data[:4] != MAGIC_MEMORY:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    (hash_len,) = struct.unpack_from("<I", data, 4)
    offset = 8
    if len(data) < offset + hash_len + 20:
        raise FormatError(f"{path}: truncated MEM1 header")
    encoder_hash = data[offset : offset + hash_len]
    offset += hash_len
    n, d, c = struct.unpack_from("<III", data, offset)
    offset += 12
    (ratio,) = struct.unpack_from("<d", data, offset)
    offset += 8
    expected = offset + 8 * (n * d + n * c + c * d)
    if len(data) != expected:
        raise FormatError(f"{path}: payload size {len(data)} != expected {expected}")
    if n < 1 or d < 1 or c < 1:
        raise FormatError(f"{path}: degenerate dimensions n={n} d={d} c={c}")

    def take(count):
        nonlocal offset
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        offset += 8 * count
        return arr

    features = take(n * d).reshape(n, d)
    labels = take(n * c).reshape(n, c)
    means = take(c * d).reshape(c, d)
    if expected_encoder_hash is not None and bytes(encoder_hash) != bytes(expected_encoder_hash):
        raise MemoryCorruptionError(
            f"{path}: memory was built under a different encoder configuration"
        )
    return PrototypeMemory(
        features=features, labels=labels, class_means=means, ratio=float(ratio),
        encoder_hash=bytes(encoder_hash),
    )
