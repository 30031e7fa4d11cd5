"""End-to-end test-time adaptation over encoded features.

Given a fixed prototype memory and per-sample source logits, the
adapter processes target features in batches: each batch is aligned
with the prototypes in a shared subspace (refit per batch), scored by
prototype similarity, and fused with the source logits sample by
sample.  Nothing in the adapter is updated by the data it sees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .fusion import FusionConfig, bf_logits, fuse_batch, similarity
from .memory import PrototypeMemory
from .subspace import IdentityAlignment, KernelSpec, TransferComponentAnalysis
from .validation import check_features


@dataclass(frozen=True)
class SubspaceConfig:
    """Subspace step settings: method ('tca' or 'none'), target dimension,
    regularizer, kernel, and adaptation batch size."""

    method: str = "tca"
    n_components: int = 150
    mu: float = 1.0
    kernel: str = "linear"
    rbf_bandwidth: float | str = "median-heuristic"
    batch_size: int = 64

    def __post_init__(self):
        if self.method not in ("tca", "none"):
            raise ValueError(f"subspace method must be 'tca' or 'none', got {self.method!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.method == "tca":
            KernelSpec(self.kernel, self.rbf_bandwidth)  # validate
            if self.mu <= 0:
                raise ValueError("mu must be positive")
            if self.n_components < 1:
                raise ValueError("n_components must be >= 1")


class TestTimeAdapter(BaseEstimator):
    """Backpropagation-free adaptation head over a frozen memory."""

    __test__ = False  # not a pytest class, despite the name

    def __init__(self, memory: PrototypeMemory, subspace: SubspaceConfig = SubspaceConfig(),
                 fusion: FusionConfig = FusionConfig()):
        self.memory = memory
        self.subspace = subspace
        self.fusion = fusion

    def _aligner(self):
        if self.subspace.method == "none":
            return IdentityAlignment()
        return TransferComponentAnalysis(
            n_components=self.subspace.n_components,
            mu=self.subspace.mu,
            kernel=self.subspace.kernel,
            rbf_bandwidth=self.subspace.rbf_bandwidth,
        )

    @staticmethod
    def _unit_rows(X: np.ndarray) -> np.ndarray:
        norms = np.sqrt((X**2).sum(axis=1, keepdims=True))
        norms[norms == 0.0] = 1.0
        return X / norms

    def adaptation_logits(self, target_features) -> np.ndarray:
        """Similarity-based class logits for every target row (batched).

        Features are L2-normalized before alignment (the downstream
        matching is cosine-based, and raw encoder magnitudes would
        otherwise dwarf the kernel regularizer).  Projected features are
        then centered jointly (prototypes plus batch) before the cosine:
        the alignment constraint only fixes the geometry of the centered
        projections, and uncentered rows share a dominant mean offset
        that saturates every cosine toward 1.
        """
        X = check_features(target_features)
        if X.shape[1] != self.memory.feature_dim:
            raise ValueError(
                f"target dim {X.shape[1]} != memory dim {self.memory.feature_dim}"
            )
        protos = self._unit_rows(self.memory.features)
        X = self._unit_rows(X)
        out = np.empty((len(X), self.memory.n_classes))
        for start in range(0, len(X), self.subspace.batch_size):
            batch = X[start : start + self.subspace.batch_size]
            proto_proj, target_proj = self._aligner().fit_transform(protos, batch)
            if self.subspace.method == "tca":
                mean = np.vstack([proto_proj, target_proj]).mean(axis=0)
                proto_proj, target_proj = proto_proj - mean, target_proj - mean
            J = similarity(target_proj, proto_proj)
            out[start : start + len(batch)] = bf_logits(
                J, self.memory.labels, self.fusion.gamma, activation=self.fusion.activation
            )
        return out

    def predict_logits(self, target_features, source_logits):
        """Fused logits for targets given matching source-model logits.

        Returns ``(fused, p, l_bf)`` where ``p`` is the per-sample mixing
        weight and ``l_bf`` the raw adaptation-branch logits.
        """
        L_s = np.asarray(source_logits, dtype=np.float64)
        X = check_features(target_features)
        if L_s.shape[0] != len(X):
            raise ValueError("source logits must align with target features")
        L_bf = self.adaptation_logits(X)
        if L_s.shape[1] != L_bf.shape[1]:
            raise ValueError(
                f"source logits have {L_s.shape[1]} classes, memory has {L_bf.shape[1]}"
            )
        fused, p = fuse_batch(L_bf, L_s, self.fusion)
        return fused, p, L_bf

    def predict(self, target_features, source_logits) -> np.ndarray:
        fused, _, _ = self.predict_logits(target_features, source_logits)
        return fused.argmax(axis=1)
