"""Volterra integro-differential problems ``x' = H(t, x, (Kx)(t))``, ``x(0) = x0``.

The memory term is ``(Kx)(t) = integral of K(t, s, x(s)) ds`` over ``[0, t]``
(``upper_limit_mode="variable_t"``, the default) or over ``[0, T]``
(``"fixed_T"``).

Map calling convention
----------------------
``H(t, x, y)`` and ``K(t, s, u)`` are called on batches.  Times arrive as arrays
of shape ``batch + (1,)`` and states as ``batch + (n,)``, so plain numpy
expressions such as ``t * s * u`` or ``1 + y`` broadcast correctly.  The result
must broadcast to ``batch + (n,)``.  Maps must be pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import quadrature
from .errors import BoundViolation, EvaluationError, OutOfRangeError
from .gauge import Disk, gauge, n_extreme_points, sample_disk, sample_pairs
from .trajectory import Trajectory

MODES = ("variable_t", "fixed_T")

_ROW_CHUNK_ELEMS = 2_000_000


@dataclass(frozen=True, eq=False)
class VolterraProblem:
    H: Callable
    K: Callable
    x0: np.ndarray
    T: float
    B: Disk
    N: float = 1.0
    upper_limit_mode: str = "variable_t"
    quadrature: str = "trapezoid"
    name: str = ""

    def __post_init__(self):
        x0 = np.atleast_1d(np.array(self.x0, dtype=float))
        x0.flags.writeable = False
        object.__setattr__(self, "x0", x0)
        if x0.ndim != 1 or not np.all(np.isfinite(x0)):
            raise ValueError("x0 must be a finite 1-d vector")
        if x0.shape[0] != self.B.dim:
            raise ValueError(f"x0 has dim {x0.shape[0]} but disk has dim {self.B.dim}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"horizon T must be positive, got {self.T!r}")
        if not self.N > 0:
            raise ValueError(f"ball radius N must be positive, got {self.N!r}")
        if self.upper_limit_mode not in MODES:
            raise ValueError(f"upper_limit_mode must be one of {MODES}")
        if self.quadrature not in quadrature.RULES:
            raise ValueError(f"quadrature must be one of {quadrature.RULES}")

    @property
    def dim(self) -> int:
        return self.x0.shape[0]

    # -- batched map evaluation -------------------------------------------------

    def kernel(self, t, s, u) -> np.ndarray:
        """``K`` on a batch; ``t`` and ``s`` broadcast against ``u[..., 0]``."""
        u = np.asarray(u, dtype=float)
        batch = u.shape[:-1]
        t = _fit(t, batch)
        s = _fit(s, batch)
        with np.errstate(all="ignore"):
            out = self.K(t[..., None], s[..., None], u)
        out = _as_vectors(out, batch + (self.dim,), "K")
        if not np.isfinite(out).all():
            i = tuple(np.argwhere(~np.isfinite(out).all(axis=-1))[0])
            w = {"t": float(t[i]), "s": float(s[i]), "u": u[i].tolist()}
            raise EvaluationError(f"kernel K produced a non-finite value at {w}", w)
        return out

    def field(self, t, x, y) -> np.ndarray:
        """``H`` on a batch."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            batch = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
            x = np.broadcast_to(x, batch + (self.dim,))
            y = np.broadcast_to(y, batch + (self.dim,))
        batch = x.shape[:-1]
        t = _fit(t, batch)
        with np.errstate(all="ignore"):
            out = self.H(t[..., None], x, y)
        out = _as_vectors(out, batch + (self.dim,), "H")
        if not np.isfinite(out).all():
            i = tuple(np.argwhere(~np.isfinite(out).all(axis=-1))[0])
            w = {"t": float(t[i]), "x": x[i].tolist(), "y": y[i].tolist()}
            raise EvaluationError(f"field H produced a non-finite value at {w}", w)
        return out


def _fit(a, shape):
    a = np.asarray(a, dtype=float)
    return a if a.shape == shape else np.broadcast_to(a, shape)


def _as_vectors(out, shape, what):
    out = np.asarray(out, dtype=float)
    if out.shape == shape:
        return out
    try:
        return np.broadcast_to(out, shape)
    except ValueError:
        raise EvaluationError(f"{what} returned shape {out.shape}, expected {shape}") from None


# -- the integral operator ---------------------------------------------------------


def eval_K_operator(prob: VolterraProblem, traj: Trajectory, t: float) -> np.ndarray:
    """``(Kx)(t)`` by composite quadrature of ``s -> K(t, s, traj(s))``.

    Off-grid ``t`` gets an extra node with a linearly interpolated state.
    """
    t = float(t)
    if not traj.covers(t, t):
        raise OutOfRangeError(f"t = {t:g} outside trajectory span [{traj.t_start:g}, {traj.t_end:g}]")
    upper = t if prob.upper_limit_mode == "variable_t" else prob.T
    if not traj.covers(0.0, upper):
        raise OutOfRangeError(
            f"trajectory span [{traj.t_start:g}, {traj.t_end:g}] does not cover [0, {upper:g}]"
        )
    if upper <= 0.0:
        return np.zeros(prob.dim)
    tol = 1e-12 * max(1.0, upper)
    mask = (traj.times >= -tol) & (traj.times < upper - tol)
    nodes = np.append(traj.times[mask], upper)
    states = np.vstack([traj.states[mask], traj(upper)])
    if len(nodes) < 2:
        nodes = np.array([0.0, upper])
        states = traj(nodes)
    w = quadrature.weights(nodes, prob.quadrature)
    vals = prob.kernel(t, nodes, states)
    return w @ vals


def memory_on_grid(prob: VolterraProblem, times, states, rows=None, W=None) -> np.ndarray:
    """``(Kx)(times[i])`` for every ``i`` in ``rows`` (default: all nodes) on the grid itself.

    In variable_t mode row ``i`` integrates over ``times[:i+1]``; in fixed_T mode the grid
    must end at ``T`` and every row integrates over the whole grid.  ``W`` may pass a
    precomputed weight matrix (``quadrature.cumulative_weights(times)``).
    """
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    rows = np.arange(len(times)) if rows is None else np.asarray(rows)
    out = np.zeros((len(rows), prob.dim))
    if prob.upper_limit_mode == "variable_t":
        if W is None:
            W = quadrature.cumulative_weights(times, prob.quadrature)
        ncols = int(rows.max()) + 1 if len(rows) else 0
        Wr = W[rows, :ncols]
    else:
        if abs(times[-1] - prob.T) > 1e-12 * max(1.0, prob.T):
            raise OutOfRangeError("fixed_T memory needs a grid ending at T")
        ncols = len(times)
        Wr = np.broadcast_to(quadrature.weights(times, prob.quadrature), (len(rows), ncols))
    if ncols == 0:
        return out
    chunk = max(1, _ROW_CHUNK_ELEMS // max(1, ncols * prob.dim))
    s = times[:ncols]
    u = states[:ncols]
    for a in range(0, len(rows), chunk):
        b = min(a + chunk, len(rows))
        t_rows = times[rows[a:b]][:, None]
        vals = prob.kernel(t_rows, s[None, :], np.broadcast_to(u, (b - a,) + u.shape))
        out[a:b] = np.einsum("ij,ijk->ik", Wr[a:b], vals)
    return out


# -- bound certificates ------------------------------------------------------------


@dataclass(frozen=True)
class BoundsCertificate:
    """Sampled suprema of the kernel bound, field bound and Lipschitz constants.  Each is a lower
    estimate of the true bound."""

    K0: float
    H0: float
    k1: float
    L: float
    sample_count: int
    seed: int
    witnesses: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "K0": self.K0,
            "H0": self.H0,
            "k1": self.k1,
            "L": self.L,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "witnesses": self.witnesses,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundsCertificate":
        return cls(
            float(d["K0"]), float(d["H0"]), float(d.get("k1", 0.0)), float(d.get("L", 0.0)),
            int(d.get("sample_count", 0)), int(d.get("seed", 0)), dict(d.get("witnesses", {})),
        )


def _stream(seed, k):
    return np.random.default_rng(np.random.SeedSequence([int(seed), k]))


def _ball(prob, samples, seed, k, scale=None, center=True):
    return sample_disk(prob.B, samples, [int(seed), k],
                       center=prob.x0 if center else None,
                       scale=prob.N if scale is None else scale)


def _n_extreme(prob, samples):
    return n_extreme_points(prob.dim)


def _corner_times(T, count):
    """Time pairs cycling through the corners of ``[0, T]^2``."""
    c = np.array([[T, T], [0.0, 0.0], [T, 0.0], [0.0, T]])
    return c[np.arange(count) % 4]


def _sup(values, make_witness):
    values = np.asarray(values)
    i = int(np.argmax(values))
    return float(values[i]), make_witness(i)


def _check_claim(name, value, witness, claimed):
    if claimed is not None and value > claimed * (1 + 1e-12) + 1e-15:
        raise BoundViolation(name, claimed, value, witness)


def _sup_A1(prob, samples, seed):
    xs = _ball(prob, samples, seed, 0)
    n_ext = _n_extreme(prob, samples)
    ts = prob.T * _stream(seed, 1).random((len(xs), 2))
    ts = np.vstack([_corner_times(prob.T, 4 * n_ext), ts])
    xs = np.vstack([np.repeat(xs[:n_ext], 4, axis=0), xs])
    vals = gauge(prob.kernel(ts[:, 0], ts[:, 1], xs), prob.B)
    return _sup(vals, lambda i: {"t": float(ts[i, 0]), "s": float(ts[i, 1]), "u": xs[i].tolist()})


def verify_A1(prob: VolterraProblem, samples: int = 2000, seed: int = 0, claimed=None) -> float:
    """Sampled ``K0 = sup gauge(K(t, s, u), B)`` over ``J^2 x (x0 + N*B)``.

    With ``claimed`` given, a sample exceeding it raises :class:`BoundViolation`.
    """
    value, witness = _sup_A1(prob, samples, seed)
    _check_claim("K0", value, witness, claimed)
    return value


def _sup_A2(prob, K0, samples, seed):
    xs = _ball(prob, samples, seed, 2)
    n_ext = _n_extreme(prob, samples)
    ys = sample_disk(prob.B, samples, [int(seed), 3], scale=K0) if K0 > 0 else np.zeros_like(xs)
    ts = prob.T * _stream(seed, 4).random(len(xs))
    # extreme x paired with aligned and opposite extreme y, at both ends of J
    ex, ey = xs[:n_ext], ys[:n_ext]
    ext_x = np.vstack([ex, ex, ex, ex])
    ext_y = np.vstack([ey, -ey, ey, -ey])
    ext_t = np.repeat([prob.T, 0.0], 2 * n_ext)
    ts = np.concatenate([ext_t, ts])
    xs = np.vstack([ext_x, xs])
    ys = np.vstack([ext_y, ys])
    vals = gauge(prob.field(ts, xs, ys), prob.B)
    return _sup(vals, lambda i: {"t": float(ts[i]), "x": xs[i].tolist(), "y": ys[i].tolist()})


def verify_A2(prob: VolterraProblem, K0: float, samples: int = 2000, seed: int = 0, claimed=None) -> float:
    """Sampled ``H0 = sup gauge(H(t, x, y), B)`` over ``J x (x0 + N*B) x K0*B``."""
    if K0 < 0:
        raise ValueError("K0 must be nonnegative")
    value, witness = _sup_A2(prob, K0, samples, seed)
    _check_claim("H0", value, witness, claimed)
    return value


def _sup_lipschitz_K(prob, samples, seed):
    u, ub = sample_pairs(prob.B, samples, [int(seed), 5], prob.x0, prob.N)
    ts = prob.T * _stream(seed, 7).random((len(u), 2))
    n_ext = _n_extreme(prob, samples)
    ts[:n_ext] = _corner_times(prob.T, n_ext)
    den = gauge(u - ub, prob.B)
    ok = den > 0
    if not ok.any():
        return 0.0, {}
    u, ub, ts, den = u[ok], ub[ok], ts[ok], den[ok]
    num = gauge(prob.kernel(ts[:, 0], ts[:, 1], u) - prob.kernel(ts[:, 0], ts[:, 1], ub), prob.B)
    return _sup(num / den, lambda i: {"t": float(ts[i, 0]), "s": float(ts[i, 1]),
                                      "u": u[i].tolist(), "u_bar": ub[i].tolist()})


def estimate_lipschitz_K(prob: VolterraProblem, samples: int = 2000, seed: int = 0, claimed=None) -> float:
    """Largest sampled ratio ``gauge(K(t,s,u) - K(t,s,ub)) / gauge(u - ub)``.

    A lower estimate of the Lipschitz constant ``k1``; coincident pairs are skipped.
    """
    value, witness = _sup_lipschitz_K(prob, samples, seed)
    _check_claim("k1", value, witness, claimed)
    return value


def _sup_lipschitz_H(prob, K0, samples, seed):
    x1, x2 = sample_pairs(prob.B, samples, [int(seed), 8], prob.x0, prob.N)
    if K0 > 0:
        y1, y2 = sample_pairs(prob.B, samples, [int(seed), 10], None, K0)
    else:
        y1 = y2 = np.zeros_like(x1)
    # cycle perturbation modes: only y moves, only x moves, both move
    mode = np.arange(len(x1)) % 3
    x2 = np.where((mode == 0)[:, None], x1, x2)
    y2 = np.where((mode == 1)[:, None], y1, y2)
    ts = prob.T * _stream(seed, 12).random(len(x1))
    den = gauge(x1 - x2, prob.B) + gauge(y1 - y2, prob.B)
    ok = den > 0
    if not ok.any():
        return 0.0, {}
    x1, x2, y1, y2, ts, den = x1[ok], x2[ok], y1[ok], y2[ok], ts[ok], den[ok]
    num = gauge(prob.field(ts, x1, y1) - prob.field(ts, x2, y2), prob.B)
    return _sup(num / den, lambda i: {"t": float(ts[i]), "x1": x1[i].tolist(), "x2": x2[i].tolist(),
                                      "y1": y1[i].tolist(), "y2": y2[i].tolist()})


def estimate_lipschitz_H(prob: VolterraProblem, K0: float, samples: int = 2000, seed: int = 0,
                         claimed=None) -> float:
    """Largest sampled ratio ``gauge(dH) / (gauge(dx) + gauge(dy))`` over
    ``J x (x0 + N*B)^2 x (K0*B)^2``; a lower estimate of ``L``."""
    value, witness = _sup_lipschitz_H(prob, K0, samples, seed)
    _check_claim("L", value, witness, claimed)
    return value


def certify(prob: VolterraProblem, samples: int = 2000, seed: int = 0, claims: dict | None = None) -> BoundsCertificate:
    """Run all four estimators.  ``claims`` may hold any of K0, H0, k1, L to be checked.

    ``H0`` and ``L`` are sampled with the claimed ``K0`` when one is given, else with the
    estimated one.
    """
    claims = claims or {}
    K0, wK = _sup_A1(prob, samples, seed)
    _check_claim("K0", K0, wK, claims.get("K0"))
    K0_dom = claims.get("K0", K0)
    H0, wH = _sup_A2(prob, K0_dom, samples, seed)
    _check_claim("H0", H0, wH, claims.get("H0"))
    k1, wk = _sup_lipschitz_K(prob, samples, seed)
    _check_claim("k1", k1, wk, claims.get("k1"))
    L, wL = _sup_lipschitz_H(prob, K0_dom, samples, seed)
    _check_claim("L", L, wL, claims.get("L"))
    return BoundsCertificate(K0, H0, k1, L, samples, seed,
                             {"K0": wK, "H0": wH, "k1": wk, "L": wL})
