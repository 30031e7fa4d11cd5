"""Training-free hierarchical point-cloud encoder.

The encoder embeds raw coordinates with trigonometric channel encodings,
then repeats a fixed grouping stage (farthest-point sampling, k-NN
grouping, position-reweighted neighbor aggregation with max+mean
pooling) a configurable number of times, doubling the feature width at
each stage, and finishes with a global max+mean pool.  There are no
trained weights anywhere; the output is a pure function of the input
coordinates and the configuration.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import check_cloud

ENV_THREADS = "BFTT3D_THREADS"


@dataclass(frozen=True)
class EncoderConfig:
    """Hyperparameters of the non-parametric encoder.

    ``d0`` is the raw embedding width (divisible by 6: three coordinate
    channels times sin/cos pairs), ``alpha``/``beta`` the wavelength and
    scale of the trigonometric encoding, ``stages`` the number of
    grouping stages (each doubles the width and keeps ``fps_ratio`` of
    the points), and ``k_neighbors`` the group size.
    """

    d0: int = 72
    alpha: float = 1000.0
    beta: float = 100.0
    stages: int = 4
    k_neighbors: int = 24
    fps_ratio: float = 0.5

    def __post_init__(self):
        if self.d0 < 6 or self.d0 % 6 != 0:
            raise ValueError(f"d0 must be a positive multiple of 6, got {self.d0}")
        if self.stages < 1:
            raise ValueError("stages must be >= 1")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if not 0.0 < self.fps_ratio <= 1.0:
            raise ValueError("fps_ratio must be in (0, 1]")
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def feature_dim(self) -> int:
        return self.d0 * 2**self.stages

    def digest(self) -> bytes:
        """Stable hash of the configuration, embedded in memory files."""
        canonical = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(canonical.encode()).digest()


def channel_embed(points, dim: int, alpha: float, beta: float) -> np.ndarray:
    """Trigonometric embedding of coordinates into ``dim`` channels.

    Each coordinate axis gets a contiguous block of ``dim // 3``
    channels holding interleaved sin/cos pairs: pair ``k`` of axis ``s``
    is ``sin/cos(alpha * p_s / beta ** (6k / dim))``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if dim % 6 != 0:
        raise ValueError(f"embedding dim must be a multiple of 6, got {dim}")
    pairs = dim // 6
    scale = alpha / beta ** (6.0 * np.arange(pairs) / dim)
    args = pts[:, :, None] * scale[None, None, :]  # (n, 3, pairs)
    out = np.empty((pts.shape[0], 3, 2 * pairs))
    out[:, :, 0::2] = np.sin(args)
    out[:, :, 1::2] = np.cos(args)
    return out.reshape(pts.shape[0], dim)


def _argmax_lex(values: np.ndarray, points: np.ndarray) -> int:
    """Index of the maximum; ties resolved by lexicographic coordinates.

    Coordinate-based ties keep farthest-point sampling invariant to the
    input point order; exactly coincident candidates fall back to the
    lowest index.
    """
    best = int(np.argmax(values))
    top = values[best]
    if np.count_nonzero(values == top) == 1:
        return best
    cand = np.flatnonzero(values == top)
    p = points[cand]
    order = np.lexsort((cand, p[:, 2], p[:, 1], p[:, 0]))
    return int(cand[order[0]])


def fps(points, target_count: int) -> np.ndarray:
    """Greedy farthest-point sampling; returns selected indices in order.

    Starts from the point farthest from the centroid, then repeatedly
    adds the point maximizing the minimum distance to the selected set.
    """
    pts = check_cloud(points)
    n = len(pts)
    if not 1 <= target_count <= n:
        raise ValueError(f"target_count must be in [1, {n}], got {target_count}")
    selected = np.empty(target_count, dtype=np.int64)
    sq = (pts**2).sum(axis=1)
    d_centroid = ((pts - pts.mean(axis=0)) ** 2).sum(axis=1)
    selected[0] = _argmax_lex(d_centroid, pts)
    min_d = np.maximum(sq + sq[selected[0]] - 2.0 * (pts @ pts[selected[0]]), 0.0)
    min_d[selected[0]] = -1.0  # never reselect
    for i in range(1, target_count):
        nxt = _argmax_lex(min_d, pts)
        selected[i] = nxt
        np.minimum(min_d, sq + sq[nxt] - 2.0 * (pts @ pts[nxt]), out=min_d)
        min_d[nxt] = -1.0
    return selected


def knn_group(points, center_indices, k: int) -> np.ndarray:
    """Indices of the k nearest points to each center, centers included.

    Rows are sorted by ascending distance with ties broken by lowest
    index, so each center lists itself first when points are distinct.
    """
    pts = check_cloud(points)
    centers = np.asarray(center_indices, dtype=np.int64)
    if k > len(pts):
        raise ValueError(f"k={k} exceeds point count {len(pts)}")
    sq = (pts**2).sum(axis=1)
    d2 = sq[centers][:, None] + sq[None, :] - 2.0 * (pts[centers] @ pts.T)
    if k == len(pts):
        return np.argsort(d2, axis=1, kind="stable")
    rows = np.arange(len(centers))[:, None]
    part = np.argpartition(d2, k - 1, axis=1)[:, :k]
    part.sort(axis=1)  # ascending index, so a stable distance sort ties by index
    sel_d = d2[rows, part]
    groups = np.take_along_axis(part, np.argsort(sel_d, axis=1, kind="stable"), axis=1)
    # argpartition breaks exact ties at the k-th boundary arbitrarily; redo
    # those rows with a full stable sort to honor the lowest-index rule.
    kth = sel_d.max(axis=1)
    boundary = (d2 == kth[:, None]).sum(axis=1) != (sel_d == kth[:, None]).sum(axis=1)
    for r in np.flatnonzero(boundary):
        groups[r] = np.argsort(d2[r], kind="stable")[:k]
    return groups


def stage_aggregate(points, features, cfg: EncoderConfig, *, target_count: int | None = None):
    """One grouping stage: FPS centers, k-NN groups, reweighted pooling.

    Every neighbor feature is concatenated with its center feature,
    reweighted by the trigonometric embedding of the neighbor offset
    (``(f + g(delta)) * g(delta)``), and condensed per center by
    elementwise max plus mean over the group.  Returns the center
    coordinates and the per-center features at twice the input width.
    """
    pts = check_cloud(points)
    feats = np.asarray(features, dtype=np.float64)
    if len(feats) != len(pts):
        raise ValueError("features must align with points")
    n = len(pts)
    if target_count is None:
        target_count = max(1, int(np.ceil(cfg.fps_ratio * n)))
    centers = fps(pts, target_count)
    groups = knn_group(pts, centers, cfg.k_neighbors)  # (c, k)

    width = 2 * feats.shape[1]
    f_center = feats[centers]  # (c, d)
    f_neighbors = feats[groups]  # (c, k, d)
    paired = np.concatenate(
        [np.broadcast_to(f_center[:, None, :], f_neighbors.shape), f_neighbors], axis=2
    )  # (c, k, 2d)

    offsets = pts[groups] - pts[centers][:, None, :]  # (c, k, 3)
    g = channel_embed(offsets.reshape(-1, 3), width, cfg.alpha, cfg.beta)
    g = g.reshape(len(centers), cfg.k_neighbors, width)

    paired += g  # weighted = (paired + g) * g, computed in place
    paired *= g
    pooled = paired.max(axis=1) + paired.mean(axis=1)
    return pts[centers], pooled


def encode(points, cfg: EncoderConfig) -> np.ndarray:
    """Full encoder: embed, run all grouping stages, global max+mean pool."""
    pts = check_cloud(points)
    feats = channel_embed(pts, cfg.d0, cfg.alpha, cfg.beta)
    for stage in range(1, cfg.stages + 1):
        n = len(pts)
        if cfg.k_neighbors > n:
            raise ValueError(
                f"stage {stage}: k_neighbors={cfg.k_neighbors} exceeds the {n} points available"
            )
        pts, feats = stage_aggregate(pts, feats, cfg)
    return feats.max(axis=0) + feats.mean(axis=0)


def resolve_workers(n_jobs: int | None = None) -> int:
    """Worker count: explicit argument, else the BFTT3D_THREADS env cap."""
    if n_jobs is not None:
        return max(1, int(n_jobs))
    env = os.environ.get(ENV_THREADS, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return 1


def encode_many(clouds, cfg: EncoderConfig, n_jobs: int | None = None) -> np.ndarray:
    """Encode a sequence of clouds into an (n, D) matrix, optionally in
    parallel worker processes; output order always follows input order."""
    clouds = list(clouds)
    workers = resolve_workers(n_jobs)
    if workers == 1 or len(clouds) < 4:
        rows = [encode(c, cfg) for c in clouds]
    else:
        chunk = max(1, len(clouds) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_encode_task, ((c, cfg) for c in clouds), chunksize=chunk))
    return np.stack(rows) if rows else np.empty((0, cfg.feature_dim))


def _encode_task(args):
    cloud, cfg = args
    return encode(cloud, cfg)


class PointCloudEncoder(BaseEstimator, TransformerMixin):
    """Stateless sklearn-style transformer wrapping :func:`encode`.

    ``transform`` accepts a sequence of (N_i, 3) arrays and returns the
    stacked (n, D) feature matrix.  ``fit`` only validates parameters.
    """

    def __init__(self, d0=72, alpha=1000.0, beta=100.0, stages=4, k_neighbors=24,
                 fps_ratio=0.5, n_jobs=None):
        self.d0 = d0
        self.alpha = alpha
        self.beta = beta
        self.stages = stages
        self.k_neighbors = k_neighbors
        self.fps_ratio = fps_ratio
        self.n_jobs = n_jobs

    @property
    def config(self) -> EncoderConfig:
        return EncoderConfig(
            d0=self.d0,
            alpha=self.alpha,
            beta=self.beta,
            stages=self.stages,
            k_neighbors=self.k_neighbors,
            fps_ratio=self.fps_ratio,
        )

    def fit(self, X=None, y=None):
        self.config  # parameter validation
        return self

    def transform(self, X) -> np.ndarray:
        return encode_many(X, self.config, n_jobs=self.n_jobs)
