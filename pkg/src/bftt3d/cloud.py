"""Point-cloud data model and deterministic synthetic shape generation.

A point cloud is a plain ``(N, 3)`` float64 array.  Generated clouds are
rounded to float32 precision so they survive the binary file format
bit-exactly; all downstream math runs in float64.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .validation import check_cloud

SHAPE_KINDS = ("sphere", "cube", "cylinder", "torus")


def _rng_for(seed: int, stream: tuple[int, ...]) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by seed and a stream id."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=stream)))


def normalize_unit_sphere(points) -> np.ndarray:
    """Center a cloud at its centroid and scale the farthest point to norm 1.

    Idempotent up to rounding.  Raises ValueError if the cloud has zero
    spatial extent (all points coincident).
    """
    pts = check_cloud(points)
    centered = pts - pts.mean(axis=0)
    max_norm = np.sqrt((centered**2).sum(axis=1).max())
    if max_norm <= 0.0:
        raise ValueError("cannot normalize a cloud with zero extent")
    return centered / max_norm


def _round_f32(points: np.ndarray) -> np.ndarray:
    # Coordinates stay f32-representable so PCB1 round-trips are bit-exact.
    return points.astype(np.float32).astype(np.float64)


def _sample_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    norms = np.sqrt((v**2).sum(axis=1, keepdims=True))
    # Resample the (measure-zero) zero vectors rather than dividing by 0.
    while np.any(norms == 0.0):
        bad = norms[:, 0] == 0.0
        v[bad] = rng.normal(size=(int(bad.sum()), 3))
        norms = np.sqrt((v**2).sum(axis=1, keepdims=True))
    return v / norms


def _sample_cube(n: int, rng: np.random.Generator) -> np.ndarray:
    # Uniform over the 6 faces of the cube [-1, 1]^3.
    face = rng.integers(0, 6, size=n)
    uv = rng.uniform(-1.0, 1.0, size=(n, 2))
    pts = np.empty((n, 3))
    axis = face // 2
    sign = np.where(face % 2 == 0, 1.0, -1.0)
    for a in range(3):
        mask = axis == a
        others = [o for o in range(3) if o != a]
        pts[mask, a] = sign[mask]
        pts[np.ix_(mask, others)] = uv[mask]
    return pts


def _sample_cylinder(n: int, rng: np.random.Generator) -> np.ndarray:
    # Surface of a cylinder with radius 0.7 and half-height 1.0, sampled
    # proportionally to area (side vs. two caps).
    radius, half_h = 0.7, 1.0
    side_area = 2.0 * np.pi * radius * (2.0 * half_h)
    cap_area = 2.0 * np.pi * radius**2
    p_side = side_area / (side_area + cap_area)
    on_side = rng.uniform(size=n) < p_side
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    pts = np.empty((n, 3))
    pts[:, 0] = np.cos(theta)
    pts[:, 1] = np.sin(theta)
    # Side: fixed radius, uniform height.  Caps: sqrt-radial, fixed height.
    r = np.where(on_side, radius, radius * np.sqrt(rng.uniform(size=n)))
    pts[:, 0] *= r
    pts[:, 1] *= r
    z_side = rng.uniform(-half_h, half_h, size=n)
    z_cap = np.where(rng.uniform(size=n) < 0.5, half_h, -half_h)
    pts[:, 2] = np.where(on_side, z_side, z_cap)
    return pts


def _sample_torus(n: int, rng: np.random.Generator) -> np.ndarray:
    # Torus with major radius 0.7, minor radius 0.3; the tube angle is
    # rejection-sampled against the surface measure (R + r cos t).
    major, minor = 0.7, 0.3
    u = rng.uniform(0.0, 2.0 * np.pi, size=n)
    t = np.empty(n)
    remaining = np.arange(n)
    while remaining.size:
        cand = rng.uniform(0.0, 2.0 * np.pi, size=remaining.size)
        accept = rng.uniform(size=remaining.size) < (major + minor * np.cos(cand)) / (major + minor)
        t[remaining[accept]] = cand[accept]
        remaining = remaining[~accept]
    ring = major + minor * np.cos(t)
    return np.stack([ring * np.cos(u), ring * np.sin(u), minor * np.sin(t)], axis=1)


_SAMPLERS = {
    "sphere": _sample_sphere,
    "cube": _sample_cube,
    "cylinder": _sample_cylinder,
    "torus": _sample_torus,
}


def generate_shape(kind: str, n_points: int, seed: int, *, normalize: bool = True) -> np.ndarray:
    """Deterministically sample a synthetic shape surface.

    Parameters
    ----------
    kind : one of ``sphere``, ``cube``, ``cylinder``, ``torus``.
    n_points : number of points, at least 8.
    seed : RNG seed; output is a pure function of (kind, n_points, seed).
    normalize : when True (default) the cloud is normalized to the unit
        sphere; ``normalize=False`` exposes the raw surface sample.
    """
    if kind not in _SAMPLERS:
        raise ConfigError(f"unknown shape kind {kind!r}; expected one of {SHAPE_KINDS}")
    if n_points < 8:
        raise ValueError(f"n_points must be >= 8, got {n_points}")
    rng = _rng_for(seed, (SHAPE_KINDS.index(kind),))
    pts = _SAMPLERS[kind](n_points, rng)
    if normalize:
        pts = normalize_unit_sphere(pts)
    return _round_f32(pts)
