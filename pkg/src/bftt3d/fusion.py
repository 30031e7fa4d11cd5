"""Similarity-based logits and entropy-weighted fusion with the source.

The adaptation branch scores a target sample by cosine similarity to
every stored prototype, activates each similarity with
``phi(x) = exp(-gamma * (1 - x))`` and averages the activations per
class.  The final prediction mixes this branch with the frozen source
model's logits using a weight derived from the two branches' softmax
entropies: the branch that is more certain contributes more.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .validation import check_features, check_logits


@dataclass(frozen=True)
class FusionConfig:
    """Fusion behavior: activation sharpness ``gamma``, adaptive or fixed
    mixing, and the space logits are mixed in.

    ``fuse_space='probability'`` (default) softmax-normalizes both logit
    vectors before mixing so the two branches' scales are comparable;
    ``'raw'`` mixes the vectors as-is.  ``activation='elementwise'``
    activates similarities before class aggregation with per-class count
    normalization; ``'summed'`` is the literal activate-after-sum form.
    """

    gamma: float = 100.0
    mode: str = "adaptive"
    fixed_p: float = 0.5
    entropy_epsilon: float = 1e-8
    fuse_space: str = "probability"
    activation: str = "elementwise"

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.mode not in ("adaptive", "fixed"):
            raise ValueError(f"mode must be 'adaptive' or 'fixed', got {self.mode!r}")
        if not 0.0 <= self.fixed_p <= 1.0:
            raise ValueError("fixed_p must be in [0, 1]")
        if self.entropy_epsilon <= 0:
            raise ValueError("entropy_epsilon must be positive")
        if self.fuse_space not in ("probability", "raw"):
            raise ValueError(f"fuse_space must be 'probability' or 'raw', got {self.fuse_space!r}")
        if self.activation not in ("elementwise", "summed"):
            raise ValueError(f"activation must be 'elementwise' or 'summed', got {self.activation!r}")


def _l2_rows(X: np.ndarray, who: str) -> np.ndarray:
    norms = np.sqrt((X**2).sum(axis=1))
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise NumericError(f"{who} sample {zero[0]} has a zero-norm feature")
    return X / norms[:, None]


def similarity(targets, prototypes) -> np.ndarray:
    """Cosine similarity matrix (n_t x n_s); rows L2-normalized first."""
    T = check_features(targets)
    P = check_features(prototypes)
    if T.shape[1] != P.shape[1]:
        raise ValueError("target and prototype dimensions differ")
    return _l2_rows(T, "target") @ _l2_rows(P, "prototype").T


def bf_logits(J, labels, gamma: float, *, activation: str = "elementwise") -> np.ndarray:
    """Class logits from a similarity matrix and one-hot prototype labels.

    ``elementwise``: activate each similarity with phi, then average the
    activations per class (invariant to per-class prototype counts).
    ``summed``: aggregate similarities per class first, then activate.
    """
    J = np.asarray(J, dtype=np.float64)
    L = np.asarray(labels, dtype=np.float64)
    if J.ndim != 2 or L.ndim != 2 or J.shape[1] != L.shape[0]:
        raise ValueError(f"shape mismatch: J {J.shape} vs labels {L.shape}")
    counts = L.sum(axis=0)
    if (counts < 1).any():
        raise ValueError("every class needs at least one prototype")
    if activation == "summed":
        return np.exp(-gamma * (1.0 - J @ L))
    phi = np.exp(-gamma * (1.0 - J))
    return phi @ (L / counts)


def softmax(logits) -> np.ndarray:
    """Row-wise (or vector) softmax with max-subtraction."""
    arr = np.asarray(logits, dtype=np.float64)
    shifted = arr - arr.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_entropy(logits) -> float:
    """Shannon entropy (nats) of the softmax distribution; in [0, ln C]."""
    p = softmax(check_logits(logits))
    logp = np.log(p, out=np.zeros_like(p), where=p > 0.0)
    return float(max(0.0, -(p * logp).sum()))


def adaptive_weight(l_bf, l_s, epsilon: float = 1e-8) -> float:
    """Mixing weight p = E(l_s) / (E(l_s) + E(l_bf)).

    Returns exactly 0.5 when the entropies agree within 1e-12 or their
    sum falls below ``epsilon``.
    """
    e_bf = softmax_entropy(l_bf)
    e_s = softmax_entropy(l_s)
    total = e_s + e_bf
    if total < epsilon or abs(e_s - e_bf) <= 1e-12:
        return 0.5
    return e_s / total


def fuse(l_bf, l_s, cfg: FusionConfig = FusionConfig()):
    """Convex combination ``p * l_bf + (1 - p) * l_s``; returns (logits, p).

    With the default probability space both inputs are softmaxed first,
    so the output lies on the probability simplex.
    """
    a = check_logits(l_bf, name="adaptation logits")
    b = check_logits(l_s, name="source logits")
    if a.shape != b.shape:
        raise ValueError(f"class-count mismatch: {a.shape} vs {b.shape}")
    p = cfg.fixed_p if cfg.mode == "fixed" else adaptive_weight(a, b, cfg.entropy_epsilon)
    if cfg.fuse_space == "probability":
        a, b = softmax(a), softmax(b)
    return p * a + (1.0 - p) * b, p


def fuse_batch(L_bf, L_s, cfg: FusionConfig = FusionConfig()):
    """Row-wise fusion of two (n, C) logit matrices -> (fused, p vector)."""
    A = np.asarray(L_bf, dtype=np.float64)
    B = np.asarray(L_s, dtype=np.float64)
    if A.shape != B.shape:
        raise ValueError(f"logit matrices differ in shape: {A.shape} vs {B.shape}")
    fused = np.empty_like(A)
    weights = np.empty(len(A))
    for i in range(len(A)):
        fused[i], weights[i] = fuse(A[i], B[i], cfg)
    return fused, weights
