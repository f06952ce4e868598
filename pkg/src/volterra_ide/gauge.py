"""Weighted p-ball disks and their Minkowski gauges.

A :class:`Disk` is the closed set ``{x : ||(x_i / w_i)_i||_p <= radius}`` for
``p`` in ``{1, 2, inf}``.  It is convex, balanced and bounded, so its gauge

    gauge(x, B) = inf{t >= 0 : x in t*B} = ||(x_i / w_i)_i||_p / radius

is a norm on the coordinate space.  Everything here works on finite-dimensional
coordinate arrays; a second "reference" disk stands in for the ambient
topology when comparing norms.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError

__all__ = [
    "Disk",
    "MackeyReport",
    "gauge",
    "contains",
    "scale_disk",
    "n_extreme_points",
    "sample_boundary",
    "sample_disk",
    "sample_pairs",
    "disk_inclusion_margin",
    "norm_ratio_bounds",
    "check_strict_mackey",
]

_P_VALUES = (1, 2, math.inf)
_MAX_SIGN_DIM = 10


def _parse_p(p):
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity"):
            return math.inf
        p = float(p)
    if p in _P_VALUES:
        return math.inf if p == math.inf else int(p)
    raise ValueError(f"norm exponent must be one of 1, 2, inf (got {p!r})")


@dataclass(frozen=True)
class Disk:
    """Origin-centred weighted p-ball; immutable."""

    p: float
    weights: tuple
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "p", _parse_p(self.p))
        w = tuple(float(v) for v in np.atleast_1d(np.asarray(self.weights, dtype=float)))
        if len(w) == 0:
            raise ValueError("disk needs at least one weight")
        if not all(np.isfinite(v) and v > 0 for v in w):
            raise ValueError(f"weights must be finite and strictly positive, got {w}")
        object.__setattr__(self, "weights", w)
        r = float(self.radius)
        if not (np.isfinite(r) and r > 0):
            raise ValueError(f"radius must be finite and positive, got {self.radius!r}")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return len(self.weights)

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.weights)

    @classmethod
    def unit(cls, p, dim=1, radius=1.0) -> "Disk":
        return cls(p, (1.0,) * dim, radius)

    @classmethod
    def from_dict(cls, d: dict) -> "Disk":
        return cls(d["p"], tuple(d["weights"]), d.get("radius", 1.0))

    def to_dict(self) -> dict:
        return {
            "p": "inf" if self.p == math.inf else self.p,
            "weights": list(self.weights),
            "radius": self.radius,
        }


def _check_dim(x: np.ndarray, B: Disk):
    if x.shape[-1:] != (B.dim,):
        raise ValueError(f"dimension mismatch: vector has shape {x.shape}, disk has dim {B.dim}")


def gauge(x, B: Disk):
    """Minkowski gauge of ``x`` (shape ``(..., n)``) with respect to ``B``.

    Returns a float for a single vector and an array of shape ``(...)`` for a batch.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    _check_dim(x, B)
    z = np.abs(x / B.w)
    if B.p == 1:
        val = z.sum(axis=-1)
    elif B.p == 2:
        val = np.sqrt((z * z).sum(axis=-1))
    else:
        val = z.max(axis=-1)
    val = val / B.radius
    return float(val) if np.ndim(val) == 0 else val


def contains(B: Disk, x, tol: float = 0.0) -> bool:
    """Membership in the closed disk, up to ``tol`` on the gauge."""
    return bool(gauge(x, B) <= 1.0 + tol)


def scale_disk(B: Disk, a: float) -> Disk:
    """The disk ``a*B``."""
    if not a > 0:
        raise ValueError(f"scale factor must be positive, got {a!r}")
    return Disk(B.p, B.weights, B.radius * a)


def _sign_points(n: int) -> np.ndarray:
    if n > _MAX_SIGN_DIM:
        return np.empty((0, n))
    return np.array(list(itertools.product((1.0, -1.0), repeat=n)))


def _extreme_directions(n: int) -> np.ndarray:
    """Axis and diagonal directions; where the classical norm ratios are attained."""
    axes = np.vstack([np.eye(n), -np.eye(n)])
    return np.vstack([axes, _sign_points(n)])


def n_extreme_points(dim: int) -> int:
    """How many extreme directions lead every boundary/disk sample of dimension ``dim``."""
    return len(_extreme_directions(dim))


def sample_boundary(B: Disk, samples: int, seed: int, include_extremes: bool = True) -> np.ndarray:
    """Points with gauge exactly 1: seeded random directions, preceded by the
    axis/diagonal directions when ``include_extremes``.

    The random part is prefix-stable: a larger ``samples`` extends the set.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((samples, B.dim))
    if include_extremes:
        dirs = np.vstack([_extreme_directions(B.dim), dirs])
    dirs = dirs * B.w
    g = gauge(dirs, B)
    dirs = dirs[g > 0]
    return dirs / gauge(dirs, B)[:, None]


def sample_disk(B: Disk, samples: int, seed, center=None, scale: float = 1.0) -> np.ndarray:
    """Seeded points of ``center + scale*B``.

    Extreme boundary points come first, then random points: every other one on the
    boundary, the rest spread through the interior with radial law ``U**(1/n)``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    ss = np.random.SeedSequence(seed if np.ndim(seed) else [int(seed)])
    dir_seed, rad_seed = ss.spawn(2)
    bnd = sample_boundary(B, samples, np.random.default_rng(dir_seed).integers(2**63),
                          include_extremes=True)
    n_ext = len(bnd) - samples
    radial = np.random.default_rng(rad_seed).random(samples) ** (1.0 / B.dim)
    radial[::2] = 1.0
    pts = bnd.copy()
    pts[n_ext:] *= radial[:, None]
    pts *= scale
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return pts


def sample_pairs(B: Disk, samples: int, seed, center=None, scale: float = 1.0):
    """Seeded pairs of points of ``center + scale*B``.

    Odd-indexed pairs are local: the first point is pulled inward by ``1e-6*scale`` and
    its partner sits exactly ``1e-6*scale`` away in gauge, so both stay in the disk and the
    separation never collapses into roundoff.
    """
    seed = list(np.atleast_1d(seed).astype(int))
    a = sample_disk(B, samples, seed + [0], center=center, scale=scale)
    b = sample_disk(B, samples, seed + [1], center=center, scale=scale)
    c = 0.0 if center is None else np.asarray(center, dtype=float)
    delta = 1e-6
    step = b - c
    g = gauge(step, B)
    step[g == 0] = B.w * B.radius * np.eye(B.dim)[0]
    step = step / gauge(step, B)[:, None]
    near = c + (1 - delta) * (a - c)
    a[1::2] = near[1::2]
    b[1::2] = near[1::2] + delta * scale * step[1::2]
    return a, b


def disk_inclusion_margin(B: Disk, D: Disk, samples: int = 2000, seed: int = 0) -> float:
    """Sampled ``sup_{x in boundary(B)} gauge(x, D)``; a value <= 1 certifies B inside D on the sample."""
    if B.dim != D.dim:
        raise ValueError(f"dimension mismatch: {B.dim} vs {D.dim}")
    pts = sample_boundary(B, samples, seed)
    return float(np.max(gauge(pts, D)))


def norm_ratio_bounds(P: Disk, Q: Disk, samples: int = 2000, seed: int = 0, domain: Disk | None = None):
    """Sampled min and max of ``gauge(x, P) / gauge(x, Q)`` over nonzero ``x``.

    The ratio is scale invariant so sampling the boundary of ``domain`` (default ``Q``)
    covers every direction that matters.
    """
    if P.dim != Q.dim:
        raise ValueError(f"dimension mismatch: {P.dim} vs {Q.dim}")
    pts = sample_boundary(domain or Q, samples, seed)
    r = gauge(pts, P) / gauge(pts, Q)
    return float(r.min()), float(r.max())


@dataclass(frozen=True)
class MackeyReport:
    lower_const: float
    upper_const: float
    sample_count: int
    max_violation: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_strict_mackey(B: Disk, D: Disk, ref: Disk, samples: int = 2000, seed: int = 0,
                        tol: float = 1e-9) -> MackeyReport:
    """Two-sided equivalence of ``gauge(., D)`` and ``gauge(., ref)`` on sampled points of ``B``.

    The constants come from one seeded draw and ``max_violation`` is measured on an
    independent draw, so a nonzero value means the sample was too coarse.
    """
    if not (B.dim == D.dim == ref.dim):
        raise ValueError("dimension mismatch between B, D and ref")
    margin = disk_inclusion_margin(B, D, samples, seed)
    if margin > 1.0 + tol:
        raise PreconditionError(f"B is not contained in D (sampled margin {margin:.6g} > 1)")

    pts = sample_disk(B, samples, seed)
    g_ref = gauge(pts, ref)
    keep = g_ref > 0
    ratio = gauge(pts[keep], D) / g_ref[keep]
    lo, hi = float(ratio.min()), float(ratio.max())

    check = sample_disk(B, samples, [int(seed), 1])
    c_ref = gauge(check, ref)
    c_d = gauge(check, D)
    excess = np.maximum(lo * c_ref - c_d, c_d - hi * c_ref)
    viol = float(max(0.0, excess.max()))
    return MackeyReport(lo, hi, int(keep.sum()), viol if viol > tol else 0.0)
