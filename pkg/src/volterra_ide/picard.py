"""Successive approximations with segment-by-segment continuation.

On a segment ``[a, b]`` with anchor ``x_a`` the iteration is

    x_{m+1}(t) = x_a + integral_a^t H(s, x_m(s), (K x_m)(s)) ds,

discretised on the node grid with the problem's quadrature rule; the memory term
always integrates from 0, using the already solved prefix on ``[0, a]``.
Segments are chased greedily up to ``eta = min(T, N / (2*H0))``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import quadrature
from .errors import BallExitError, NonConvergenceError, SolveError
from .gauge import Disk, gauge, norm_ratio_bounds, sample_disk
from .oracle import compare
from .problem import BoundsCertificate, VolterraProblem, certify, eval_K_operator, memory_on_grid
from .trajectory import Trajectory, uniform_grid

_BALL_RTOL = 1e-12


@dataclass(frozen=True)
class SolveConfig:
    h: float = 1e-3
    tol: float = 1e-10
    max_iter: int = 100
    N: float | None = None  # falls back to the problem's N
    sigma_policy: float = 1.0
    ref: Disk | None = None  # base-topology disk for the norm-domination check

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.N is not None and not self.N > 0:
            raise ValueError("N must be positive")
        if not 0 < self.sigma_policy <= 1:
            raise ValueError("sigma_policy must lie in (0, 1]")


@dataclass
class SegmentResult:
    traj: Trajectory  # the segment alone, [a, b]
    iterations: int
    final_delta: float
    deltas: list
    ref_deltas: list = field(default_factory=list)


@dataclass
class SolveReport:
    eta: float
    t_end: float
    segments: list
    converged: bool
    iterate_deltas: list
    ball_margin: float
    message: str = ""
    base_topology: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, allow_nan=False)


def eta(T: float, H0: float, N: float = 1.0) -> float:
    """Guaranteed existence interval ``min(T, N / (2*H0))``; ``H0 = 0`` gives ``T``."""
    if not T > 0:
        raise ValueError(f"T must be positive, got {T!r}")
    if not N > 0:
        raise ValueError(f"N must be positive, got {N!r}")
    if H0 < 0:
        raise ValueError(f"H0 must be nonnegative, got {H0!r}")
    if H0 == 0:
        return float(T)
    return min(float(T), N / (2 * H0))


class _PicardMap:
    """The discrete successive-approximation map on a fixed grid.

    Nodes before ``start`` are a frozen prefix; the anchor is ``states[start]``.
    """

    def __init__(self, prob: VolterraProblem, times, start: int = 0):
        self.prob = prob
        self.times = np.asarray(times, dtype=float)
        self.start = start
        self.rows = np.arange(start, len(self.times))
        self.W_mem = (quadrature.cumulative_weights(self.times, prob.quadrature)
                      if prob.upper_limit_mode == "variable_t" else None)
        self.W_seg = quadrature.cumulative_weights(self.times[start:], prob.quadrature)

    def __call__(self, states: np.ndarray) -> np.ndarray:
        y = memory_on_grid(self.prob, self.times, states, self.rows, self.W_mem)
        f = self.prob.field(self.times[self.rows], states[self.rows], y)
        out = states.copy()
        out[self.rows] = states[self.start] + self.W_seg @ f
        return out


def picard_step(prob: VolterraProblem, current: Trajectory, start: int = 0) -> Trajectory:
    """One successive approximation on ``current``'s grid.

    Nodes before index ``start`` are kept as the solved prefix; ``current.states[start]``
    is the anchor.  The grid must begin at 0 so the memory term can integrate from 0.
    """
    if abs(current.t_start) > 1e-14:
        raise ValueError("picard_step needs a trajectory starting at t = 0")
    new = _PicardMap(prob, current.times, start)(np.array(current.states))
    return Trajectory(current.times, new)


def fixed_point_residual(prob: VolterraProblem, traj: Trajectory) -> float:
    """Discrete defect ``sup_t gauge(x(t) - x0 - integral_0^t H(s, x, Kx) ds, B)``."""
    states = np.array(traj.states)
    states[0] = prob.x0
    new = _PicardMap(prob, traj.times, 0)(states)
    return float(np.max(gauge(traj.states - new, prob.B)))


def _ball_check(prob, N, times, states, partial):
    g = gauge(states - prob.x0, prob.B)
    i = int(np.argmax(g))
    if g[i] > N * (1 + _BALL_RTOL):
        raise BallExitError(
            f"iterate left the ball x0 + {N:g}*B at t = {times[i]:.6g} (gauge {g[i]:.6g})",
            float(times[i]), float(g[i]), partial,
        )


def solve_segment(prob: VolterraProblem, a: float, b: float, anchor, prefix: Trajectory | None,
                  cfg: SolveConfig, initial=None) -> SegmentResult:
    """Iterate the successive-approximation map on ``[a, b]`` until the sup B-gauge change
    between consecutive iterates drops below ``cfg.tol``.

    ``prefix`` is the solved trajectory on ``[0, a]`` (``None`` when ``a == 0``).  The first
    iterate is the constant ``anchor`` unless ``initial(times) -> states`` overrides it.
    """
    if not 0 <= a < b:
        raise ValueError(f"need 0 <= a < b, got [{a}, {b}]")
    anchor = np.asarray(anchor, dtype=float)
    N = cfg.N or prob.N
    seg_times = uniform_grid(a, b, cfg.h)
    if prefix is None:
        if a != 0:
            raise ValueError("a prefix trajectory is required when a > 0")
        times, p_states, start = seg_times, np.empty((0, prob.dim)), 0
    else:
        if abs(prefix.t_end - a) > 1e-12 * max(1.0, a):
            raise ValueError(f"prefix ends at {prefix.t_end:g}, segment starts at {a:g}")
        times = np.concatenate([prefix.times[:-1], seg_times])
        p_states = prefix.states[:-1]
        start = len(prefix.times) - 1

    seg0 = np.broadcast_to(anchor, (len(seg_times), prob.dim)).copy()
    if initial is not None:
        seg0 = np.array(initial(seg_times), dtype=float).reshape(seg0.shape)
        seg0[0] = anchor
    X = np.vstack([p_states, seg0])
    step = _PicardMap(prob, times, start)
    ref_ratio = None
    deltas, ref_deltas = [], []

    def partial():
        return Trajectory(seg_times, X[start:])

    for m in range(1, cfg.max_iter + 1):
        Xn = step(X)
        diff = Xn[start:] - X[start:]
        delta = float(np.max(gauge(diff, prob.B)))
        deltas.append(delta)
        if cfg.ref is not None:
            ref_deltas.append(float(np.max(gauge(diff, cfg.ref))))
        X = Xn
        _ball_check(prob, N, seg_times, X[start:], partial())
        if delta < cfg.tol:
            return SegmentResult(Trajectory(seg_times, X[start:]), m, delta, deltas, ref_deltas)
    raise NonConvergenceError(
        f"no convergence on [{a:.6g}, {b:.6g}] after {cfg.max_iter} iterations "
        f"(last delta {deltas[-1]:.3g}, tol {cfg.tol:.3g})",
        deltas, partial(),
    )


def _join(prefix: Trajectory | None, seg: Trajectory) -> Trajectory:
    if prefix is None:
        return seg
    return Trajectory(np.concatenate([prefix.times[:-1], seg.times]),
                      np.vstack([prefix.states[:-1], seg.states]))


def _next_boundary(a, sigma, eta_v, h):
    eps = 1e-9
    if a + sigma >= eta_v - eps * h:
        return eta_v
    k = math.floor((a + sigma) / h + eps)
    b = k * h
    if b <= a + eps * h:
        b = (math.floor(a / h + eps) + 1) * h
    if b >= eta_v - eps * h:
        b = eta_v
    return b


def solve(prob: VolterraProblem, cert: BoundsCertificate, cfg: SolveConfig, initial=None):
    """Solve on ``[0, eta]`` by greedy continuation.

    Each segment length is ``sigma_policy * min(eta - a, gamma/H0, gamma/K0)`` with
    ``gamma`` half the gauge margin left between the anchor and the boundary of
    ``x0 + N*B``, snapped down to the ``h`` grid (at least one step).  In fixed_T mode the
    memory is non-causal, so a single segment covers ``[0, T]``.

    ``initial(segment_index, times, anchor)`` may override the constant first iterate.

    Returns ``(trajectory, report)``.  On failure a :class:`SolveError` is raised whose
    ``partial`` is ``(trajectory_so_far, report)``.
    """
    N = cfg.N or prob.N
    eta_v = eta(prob.T, cert.H0, N)
    t_target = prob.T if prob.upper_limit_mode == "fixed_T" else eta_v
    traj = None
    segments, all_deltas, all_ref = [], [], []
    a, anchor = 0.0, prob.x0.copy()

    def report(converged, message=""):
        t_end = traj.t_end if traj is not None else 0.0
        margin = float(np.max(gauge(traj.states - prob.x0, prob.B))) if traj is not None else 0.0
        rep = SolveReport(eta_v, t_end, list(segments), converged, list(all_deltas), margin, message)
        if cfg.ref is not None and all_deltas:
            upper = norm_ratio_bounds(cfg.ref, prob.B)[1]
            dominated = all(r <= upper * d * (1 + 1e-9) + 1e-300 for r, d in zip(all_ref, all_deltas))
            rep.base_topology = {"upper_const": upper, "ref_deltas": list(all_ref), "dominated": dominated}
        return rep

    while a < t_target:
        if prob.upper_limit_mode == "fixed_T":
            b = t_target
        else:
            gam = (N - gauge(anchor - prob.x0, prob.B)) / 2
            limits = [t_target - a]
            if cert.H0 > 0:
                limits.append(gam / cert.H0)
            if cert.K0 > 0:
                limits.append(gam / cert.K0)
            b = _next_boundary(a, cfg.sigma_policy * max(min(limits), 0.0), t_target, cfg.h)
        idx = len(segments)
        init = None if initial is None else (lambda ts, _i=idx, _x=anchor: initial(_i, ts, _x))
        try:
            res = solve_segment(prob, a, b, anchor, traj, cfg, init)
        except SolveError as exc:
            all_deltas.extend(getattr(exc, "deltas", []))
            exc.partial = (traj, report(False, str(exc)))
            raise
        traj = _join(traj, res.traj)
        anchor = res.traj.states[-1].copy()
        seg = {
            "sigma_start": a,
            "sigma_end": b,
            "iterations": res.iterations,
            "final_delta": res.final_delta,
            "deltas": res.deltas,
            "anchor_end": anchor.tolist(),
        }
        if prob.upper_limit_mode == "variable_t":
            seg["y_sigma"] = eval_K_operator(prob, traj, b).tolist()
        segments.append(seg)
        all_deltas.extend(res.deltas)
        all_ref.extend(res.ref_deltas)
        a = b
    return traj, report(True)


def verify_uniqueness(prob: VolterraProblem, cfg: SolveConfig, perturbation_scale: float, trials: int,
                      seed: int = 0, cert: BoundsCertificate | None = None, samples: int = 2000) -> float:
    """Re-solve from seeded perturbed first iterates and return the largest sup B-gauge
    distance to the unperturbed solution.

    The perturbation at every node is a point of ``perturbation_scale * B``.
    """
    if perturbation_scale < 0:
        raise ValueError("perturbation_scale must be nonnegative")
    if cert is None:
        cert = certify(prob, samples, seed)
    base, _ = solve(prob, cert, cfg)
    worst = 0.0
    for k in range(trials):
        def initial(seg_index, times, anchor, _k=k):
            if perturbation_scale == 0:
                return np.broadcast_to(anchor, (len(times), prob.dim))
            pts = sample_disk(prob.B, len(times), [int(seed), _k, seg_index], scale=perturbation_scale)
            return anchor + pts[-len(times):]

        other, _ = solve(prob, cert, cfg, initial=initial)
        worst = max(worst, compare(base, other, prob.B))
    return worst
