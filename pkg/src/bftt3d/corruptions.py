"""Deterministic point-cloud corruption generators, severity 1-5.

Severity picks a row in a per-kind parameter table; severity 0 is the
identity and exists for testing.  Randomness comes from a Philox
counter-based generator keyed by (seed, kind, severity), so results are
independent of execution order across samples.

Schedules (index = severity):

=========== ==========================================================
uniform     per-axis noise U(-a, a), a in {.01,.02,.03,.04,.05}
gaussian    per-axis noise N(0, s), s in {.01,.02,.03,.04,.05}
background  {10,20,30,40,50} uniform points in the bounding cube
impulse     {1,2,3,4,5}% of points displaced by +-0.1 per axis
upsampling  duplicates {10..50}% of points with U(-.02,.02) jitter
rbf         Gaussian radial-basis warp, amplitude {.01...05}
rbf-inv     inverse-multiquadric warp, amplitude {.01...05}
den-dec     keeps {90,80,70,60,50}% via seeded voxel thinning
den-inc     adds {10..50}% jittered points near 3 seeded anchors
shear       off-diagonal shear entries U(-s, s), s in {.05...25}
rot         rotation {5,15,30,60,90} deg about a seeded axis
cut         removes {1..5} seeded slabs of thickness 0.1
distort     tighter radial-basis warp, amplitude {.02...10}
occlusion   drops points behind a seeded plane, margin {.4,.2,0,-.2,-.4}
lidar       keeps points near {16,12,8,6,4} polar scan rings
=========== ==========================================================

Only ``shear`` and ``distort`` re-normalize afterwards (they change the
global scale); additive/noise kinds keep their shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import _round_f32, normalize_unit_sphere
from .errors import ConfigError
from .validation import check_cloud

CORRUPTION_KINDS = (
    "uniform",
    "gaussian",
    "background",
    "impulse",
    "upsampling",
    "rbf",
    "rbf-inv",
    "den-dec",
    "den-inc",
    "shear",
    "rot",
    "cut",
    "distort",
    "occlusion",
    "lidar",
)

_AMP = (0.0, 0.01, 0.02, 0.03, 0.04, 0.05)
_FRAC = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
_BACKGROUND_POINTS = (0, 10, 20, 30, 40, 50)
_IMPULSE_FRAC = (0.0, 0.01, 0.02, 0.03, 0.04, 0.05)
_KEEP_FRAC = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5)
_SHEAR = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25)
_ROT_DEG = (0.0, 5.0, 15.0, 30.0, 60.0, 90.0)
_SLABS = (0, 1, 2, 3, 4, 5)
_DISTORT_AMP = (0.0, 0.02, 0.04, 0.06, 0.08, 0.1)
# Negative margins push the cutting plane past the centroid; at least 1/8
# of the points always survive so hierarchical encoders keep working.
_OCCLUSION_MARGIN = (np.inf, 0.4, 0.2, 0.0, -0.2, -0.4)
_LIDAR_RINGS = (0, 16, 12, 8, 6, 4)

# Grown/shrunk point counts per kind, used by tests and the harness.
GROWING_KINDS = frozenset({"background", "upsampling", "den-inc"})
SHRINKING_KINDS = frozenset({"den-dec", "cut", "occlusion", "lidar"})
_MIN_POINTS = 8


@dataclass(frozen=True)
class CorruptionSpec:
    """One corruption request: family, severity 1-5 (0 = identity), seed."""

    kind: str
    severity: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise ConfigError(f"unknown corruption kind {self.kind!r}")
        if not 0 <= self.severity <= 5:
            raise ConfigError(f"severity must be in [0, 5], got {self.severity}")


def _rng(spec: CorruptionSpec) -> np.random.Generator:
    key = (CORRUPTION_KINDS.index(spec.kind), spec.severity)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(spec.seed, spawn_key=key)))


def _unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    while (n := np.sqrt((v**2).sum())) == 0.0:
        v = rng.normal(size=3)
    return v / n


def _warp(pts, rng, amplitude, width, kernel):
    """Displace points along 5 seeded radial-basis bumps."""
    centers = rng.uniform(-1.0, 1.0, size=(5, 3))
    directions = np.stack([_unit_vector(rng) for _ in range(5)])
    d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    if kernel == "gaussian":
        w = np.exp(-d2 / (2.0 * width**2))
    else:  # inverse multiquadric
        w = 1.0 / np.sqrt(1.0 + d2 / width**2)
    return pts + amplitude * (w @ directions)


def _rotation_matrix(axis: np.ndarray, angle_rad: float) -> np.ndarray:
    x, y, z = axis
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    cross = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return c * np.eye(3) + s * cross + (1.0 - c) * np.outer(axis, axis)


def _corrupt_uniform(pts, rng, sev):
    return pts + rng.uniform(-_AMP[sev], _AMP[sev], size=pts.shape)


def _corrupt_gaussian(pts, rng, sev):
    return pts + rng.normal(0.0, _AMP[sev], size=pts.shape)


def _corrupt_background(pts, rng, sev):
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    extra = rng.uniform(lo, hi, size=(_BACKGROUND_POINTS[sev], 3))
    return np.vstack([pts, extra])


def _corrupt_impulse(pts, rng, sev):
    n = len(pts)
    count = int(round(_IMPULSE_FRAC[sev] * n))
    idx = rng.choice(n, size=min(count, n), replace=False)
    signs = rng.choice([-1.0, 1.0], size=(len(idx), 3))
    out = pts.copy()
    out[idx] += 0.1 * signs
    return out


def _corrupt_upsampling(pts, rng, sev):
    n = len(pts)
    count = int(np.ceil(_FRAC[sev] * n)) if _FRAC[sev] > 0 else 0
    if count == 0:
        return pts
    idx = rng.integers(0, n, size=count)
    extra = pts[idx] + rng.uniform(-0.02, 0.02, size=(count, 3))
    return np.vstack([pts, extra])


def _corrupt_den_dec(pts, rng, sev):
    n = len(pts)
    remove = n - int(round(_KEEP_FRAC[sev] * n))
    if remove <= 0:
        return pts
    # Voxel thinning: clear 4x4x4 bounding-box voxels in seeded order.
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    cell = np.minimum(((pts - lo) / span * 4).astype(int), 3)
    voxel = cell[:, 0] * 16 + cell[:, 1] * 4 + cell[:, 2]
    doomed: list[np.ndarray] = []
    remaining = remove
    for v in rng.permutation(64):
        members = np.flatnonzero(voxel == v)
        if members.size == 0:
            continue
        if members.size <= remaining:
            doomed.append(members)
            remaining -= members.size
        else:
            doomed.append(rng.choice(members, size=remaining, replace=False))
            remaining = 0
        if remaining == 0:
            break
    keep = np.ones(n, dtype=bool)
    keep[np.concatenate(doomed)] = False
    return pts[keep]


def _corrupt_den_inc(pts, rng, sev):
    n = len(pts)
    count = int(np.ceil(_FRAC[sev] * n)) if _FRAC[sev] > 0 else 0
    if count == 0:
        return pts
    anchors = pts[rng.choice(n, size=min(3, n), replace=False)]
    anchor_of = rng.integers(0, len(anchors), size=count)
    d2 = ((pts[None, :, :] - anchors[:, None, :]) ** 2).sum(axis=2)
    new_pts = np.empty((count, 3))
    for a in range(len(anchors)):
        rows = np.flatnonzero(anchor_of == a)
        if rows.size == 0:
            continue
        near = np.flatnonzero(d2[a] <= 0.3**2)
        base = pts[rng.choice(near, size=rows.size)] if near.size else np.tile(anchors[a], (rows.size, 1))
        new_pts[rows] = base
    new_pts += rng.normal(0.0, 0.01, size=(count, 3))
    return np.vstack([pts, new_pts])


def _corrupt_shear(pts, rng, sev):
    if _SHEAR[sev] == 0.0:
        return pts
    m = np.eye(3)
    off = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
    for i, j in off:
        m[i, j] = rng.uniform(-_SHEAR[sev], _SHEAR[sev])
    return normalize_unit_sphere(pts @ m.T)


def _corrupt_rot(pts, rng, sev):
    axis = _unit_vector(rng)
    if _ROT_DEG[sev] == 0.0:
        return pts
    return pts @ _rotation_matrix(axis, np.deg2rad(_ROT_DEG[sev])).T


def _corrupt_cut(pts, rng, sev):
    out = pts
    for _ in range(_SLABS[sev]):
        if len(out) <= _MIN_POINTS:
            break
        direction = _unit_vector(rng)
        proj = out @ direction
        center = proj[rng.integers(0, len(out))]  # slab anchored on a point
        keep = np.abs(proj - center) > 0.05
        if not keep.any():
            keep = np.abs(proj - center) > np.abs(proj - center).min()
        out = out[keep] if keep.sum() >= _MIN_POINTS else out[np.argsort(np.abs(proj - center))[-_MIN_POINTS:]]
    return out


def _corrupt_distort(pts, rng, sev):
    if _DISTORT_AMP[sev] == 0.0:
        return pts
    return normalize_unit_sphere(_warp(pts, rng, _DISTORT_AMP[sev], 0.25, "gaussian"))


def _corrupt_occlusion(pts, rng, sev):
    margin = _OCCLUSION_MARGIN[sev]
    if not np.isfinite(margin):
        return pts
    normal = _unit_vector(rng)
    proj = (pts - pts.mean(axis=0)) @ normal
    keep = proj >= -margin
    floor = int(np.ceil(len(pts) / 8))
    if keep.sum() < floor:  # keep the least-occluded eighth of the cloud
        keep = np.zeros(len(pts), dtype=bool)
        keep[np.argsort(-proj, kind="stable")[:floor]] = True
    if keep.all():  # margin missed the cloud: still drop the deepest point
        keep[np.argmin(proj)] = False
    return pts[keep]


def _corrupt_lidar(pts, rng, sev):
    rings = _LIDAR_RINGS[sev]
    if rings == 0:
        return pts
    axis = _unit_vector(rng)
    centered = pts - pts.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=1))
    norms[norms == 0.0] = 1.0
    polar = np.arccos(np.clip(centered @ axis / norms, -1.0, 1.0))
    beam_angles = (np.arange(rings) + 0.5) * np.pi / rings
    dist = np.abs(polar[:, None] - beam_angles[None, :]).min(axis=1)
    tol = 0.02 * np.pi
    keep = dist <= tol
    if not keep.any():
        keep[np.argmin(dist)] = True
    if keep.all():
        keep[np.argmax(dist)] = False
    return pts[keep]


_CORRUPTORS = {
    "uniform": _corrupt_uniform,
    "gaussian": _corrupt_gaussian,
    "background": _corrupt_background,
    "impulse": _corrupt_impulse,
    "upsampling": _corrupt_upsampling,
    "rbf": lambda pts, rng, sev: _warp(pts, rng, _AMP[sev], 0.5, "gaussian") if _AMP[sev] else pts,
    "rbf-inv": lambda pts, rng, sev: _warp(pts, rng, _AMP[sev], 0.5, "invmq") if _AMP[sev] else pts,
    "den-dec": _corrupt_den_dec,
    "den-inc": _corrupt_den_inc,
    "shear": _corrupt_shear,
    "rot": _corrupt_rot,
    "cut": _corrupt_cut,
    "distort": _corrupt_distort,
    "occlusion": _corrupt_occlusion,
    "lidar": _corrupt_lidar,
}


def expected_kept_count(kind: str, severity: int, n: int) -> int:
    """Retained point count for the deterministic-count shrinking kinds."""
    if kind == "den-dec":
        return int(round(_KEEP_FRAC[severity] * n))
    raise ConfigError(f"{kind} has no fixed retention schedule")


def corrupt(points, spec: CorruptionSpec) -> np.ndarray:
    """Apply one corruption; deterministic per (cloud, spec)."""
    pts = check_cloud(points)
    if spec.severity == 0:
        return pts.copy()
    rng = _rng(spec)
    out = _CORRUPTORS[spec.kind](pts, rng, spec.severity)
    out = np.asarray(out, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"corruption {spec.kind} produced non-finite coordinates")
    return _round_f32(out)
