"""Frozen source-model logit providers.

Two kinds: replay of an exported LGT1 logit file, and a built-in
training-free nearest-centroid classifier over clean-source encoder
features (temperature-scaled cosine logits).  Both are strictly
read-only during adaptation.
"""

from __future__ import annotations

import hashlib
import logging
import struct

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .formats import read_features, read_logits
from .validation import check_features, check_labels

logger = logging.getLogger(__name__)


class FileLogitProvider:
    """Replays rows of an LGT1 file by sample index."""

    def __init__(self, path):
        self.path = str(path)
        self._logits = read_logits(path)
        self._logits.setflags(write=False)

    @property
    def n_samples(self) -> int:
        return self._logits.shape[0]

    @property
    def n_classes(self) -> int:
        return self._logits.shape[1]

    def logits_for(self, sample_index: int) -> np.ndarray:
        if not 0 <= sample_index < self.n_samples:
            raise IndexError(f"sample index {sample_index} outside [0, {self.n_samples})")
        return self._logits[sample_index].copy()

    def logits_matrix(self) -> np.ndarray:
        return self._logits.copy()

    def state_hash(self) -> str:
        return hashlib.sha256(self._logits.tobytes()).hexdigest()


class NearestCentroidSource(BaseEstimator, ClassifierMixin):
    """Training-free source model: per-class feature centroids, scored by
    temperature-scaled cosine similarity."""

    def __init__(self, temperature: float = 0.04):
        self.temperature = temperature

    def fit(self, X, y):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        X = check_features(X)
        y = check_labels(y)
        if len(y) != len(X):
            raise ValueError("labels must align with features")
        n_classes = int(y.max()) + 1
        counts = np.bincount(y, minlength=n_classes)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise ValueError(f"class {empty[0]} has no features")
        centroids = np.stack([X[y == c].mean(axis=0) for c in range(n_classes)])
        norms = np.sqrt((centroids**2).sum(axis=1))
        if (norms == 0.0).any():
            raise ValueError("a class centroid has zero norm")
        for a in range(n_classes):
            for b in range(a + 1, n_classes):
                if np.array_equal(centroids[a], centroids[b]):
                    logger.warning("classes %d and %d have identical centroids", a, b)
        self.centroids_ = centroids
        self.centroids_.setflags(write=False)
        self.n_classes_ = n_classes
        return self

    def predict_logits(self, X) -> np.ndarray:
        X = check_features(X)
        if X.shape[1] != self.centroids_.shape[1]:
            raise ValueError(
                f"feature dim {X.shape[1]} != centroid dim {self.centroids_.shape[1]}"
            )
        xn = np.sqrt((X**2).sum(axis=1, keepdims=True))
        xn[xn == 0.0] = 1.0
        cn = np.sqrt((self.centroids_**2).sum(axis=1, keepdims=True))
        return (X / xn) @ (self.centroids_ / cn).T / self.temperature

    def logits_for(self, feature) -> np.ndarray:
        return self.predict_logits(np.atleast_2d(feature))[0]

    def predict(self, X) -> np.ndarray:
        return self.predict_logits(X).argmax(axis=1)

    def state_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.centroids_).tobytes())
        h.update(struct.pack("<d", self.temperature))
        return h.hexdigest()


def fit_centroids(features, labels, temperature: float = 0.04) -> NearestCentroidSource:
    """Build a frozen centroid provider from clean-source features."""
    return NearestCentroidSource(temperature=temperature).fit(features, labels)


def parse_source_spec(text: str, *, temperature: float = 0.04):
    """Build a provider from a CLI spec.

    ``file:<path.lgt>`` replays exported logits;
    ``centroid:<features.bin>:<manifest.jsonl>`` fits centroids from an
    FTR1 file and the matching manifest labels.
    """
    from .formats import read_manifest

    if text.startswith("file:"):
        return FileLogitProvider(text[len("file:"):])
    if text.startswith("centroid:"):
        rest = text[len("centroid:"):]
        parts = rest.rsplit(":", 1)
        if len(parts) != 2:
            raise ValueError(f"bad centroid source spec {text!r}")
        features = read_features(parts[0])
        labels = np.array([label for _, label in read_manifest(parts[1])], dtype=np.int64)
        if len(labels) != len(features):
            raise ValueError("manifest length does not match feature rows")
        return fit_centroids(features, labels, temperature)
    raise ValueError(f"source spec must start with 'file:' or 'centroid:', got {text!r}")
