"""Lyapunov-dissipative checks and epsilon-approximation sequences.

A :class:`LyapunovSpec` bundles a comparison functional ``V(t, x, y) >= 0``
that vanishes exactly on the diagonal, a comparison function ``g(t, v, w)``
and a memory kernel ``S(t, s, v)`` bounded by ``S0``.  The checks here are
numerical: sampled axioms, a one-sided difference quotient of ``V`` along the
flow compared with ``g``, and the mutual convergence of a sequence of
epsilon-approximate solutions.

``g`` is taken on trust beyond the inequalities checked here: its comparison
class membership is a user assertion.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import quadrature
from .errors import DefectError
from .gauge import Disk, check_strict_mackey, gauge, sample_disk, sample_pairs
from .oracle import compare
from .picard import SolveConfig, fixed_point_residual, solve
from .problem import BoundsCertificate, VolterraProblem, certify, eval_K_operator
from .trajectory import Trajectory

DEFAULT_H_VALUES = (1e-2, 1e-3, 1e-4, 1e-5)
DINI_RTOL = 1e-3


def _scalar_out(out, batch):
    out = np.asarray(out, dtype=float)
    if out.shape == batch + (1,):
        return out[..., 0]
    return np.broadcast_to(out, batch)


@dataclass(frozen=True, eq=False)
class LyapunovSpec:
    """``V``, ``g`` and ``S`` follow the batched map convention of the problem module:
    time-like arguments (``t``, ``s``, ``v``, ``w``) carry a trailing length-1 axis."""

    V: Callable
    g: Callable
    S: Callable
    S0: float
    L_V: float

    def value(self, t, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        batch = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
        t = np.broadcast_to(np.asarray(t, dtype=float), batch)
        out = _scalar_out(self.V(t[..., None], x, y), batch)
        return float(out) if out.ndim == 0 else out

    def comparison(self, t, v, w) -> float:
        a = lambda z: np.asarray(z, dtype=float).reshape(1)
        return float(_scalar_out(self.g(a(t), a(v), a(w)), ()))

    def memory_kernel(self, t, s, v):
        v = np.asarray(v, dtype=float)
        batch = np.broadcast_shapes(np.shape(s), v.shape)
        t = np.broadcast_to(np.asarray(t, dtype=float), batch)
        s = np.broadcast_to(np.asarray(s, dtype=float), batch)
        v = np.broadcast_to(v, batch)
        return _scalar_out(self.S(t[..., None], s[..., None], v[..., None]), batch)


def gauge_spec(B: Disk, g=None, S=None, S0: float = 1.0) -> LyapunovSpec:
    """``V(t, x, y) = gauge(x - y, B)``, Lipschitz constant 1; ``g`` and ``S`` default to 0."""
    zero = lambda *args: np.zeros(np.shape(args[0]))
    return LyapunovSpec(lambda t, x, y: gauge(x - y, B), g or zero, S or zero, S0, 1.0)


# -- axioms -------------------------------------------------------------------------------


@dataclass
class AxiomReport:
    passed: bool
    diagonal_max: float
    positivity_min: float
    lipschitz_ratio: float
    failures: list = field(default_factory=list)

    def to_dict(self):
        return dict(self.__dict__)


def check_V_axioms(spec: LyapunovSpec, B: Disk, samples: int = 1000, seed: int = 0,
                   center=None, scale: float = 1.0, T: float = 1.0) -> AxiomReport:
    """Sampled check of ``V(t,x,x) = 0``, ``V(t,x,y) > 0`` off the diagonal and the Lipschitz
    bound ``|V(t,x,y) - V(t,x1,y1)| <= L_V*(gauge(x-x1) + gauge(y-y1))`` on ``center + scale*B``."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 20]))
    xs = sample_disk(B, samples, [int(seed), 21], center=center, scale=scale)
    ys = sample_disk(B, samples, [int(seed), 22], center=center, scale=scale)
    ts = T * rng.random(len(xs))
    failures = []

    diag = np.abs(spec.value(ts, xs, xs))
    i = int(np.argmax(diag))
    if diag[i] > 1e-12:
        failures.append({"axiom": "diagonal", "t": float(ts[i]), "x": xs[i].tolist(), "V": float(diag[i])})

    sep = gauge(xs - ys, B) >= 1e-6
    pos_min = float("inf")
    if sep.any():
        vals = spec.value(ts[sep], xs[sep], ys[sep])
        j = int(np.argmin(vals))
        pos_min = float(vals[j])
        if not pos_min > 0:
            failures.append({"axiom": "positivity", "t": float(ts[sep][j]), "x": xs[sep][j].tolist(),
                             "y": ys[sep][j].tolist(), "V": pos_min})

    x1, x2 = sample_pairs(B, samples, [int(seed), 23], center, scale)
    y1, y2 = sample_pairs(B, samples, [int(seed), 24], center, scale)
    mode = np.arange(len(x1)) % 3
    x2 = np.where((mode == 0)[:, None], x1, x2)
    y2 = np.where((mode == 1)[:, None], y1, y2)
    tp = T * rng.random(len(x1))
    den = gauge(x1 - x2, B) + gauge(y1 - y2, B)
    ok = den > 0
    v1, v2 = spec.value(tp[ok], x1[ok], y1[ok]), spec.value(tp[ok], x2[ok], y2[ok])
    ratio = np.abs(v1 - v2) / den[ok]
    # Close pairs lose digits in v1 - v2; only an excess beyond that roundoff counts.
    roundoff = 64 * np.finfo(float).eps * (1.0 + np.abs(v1) + np.abs(v2))
    excess = np.abs(v1 - v2) - spec.L_V * den[ok] - roundoff
    k = int(np.argmax(excess))
    lip = float(ratio.max())
    if excess[k] > 0:
        lip = float(ratio[k])
        failures.append({"axiom": "lipschitz", "ratio": lip, "L_V": spec.L_V, "t": float(tp[ok][k]),
                         "x": x1[ok][k].tolist(), "y": y1[ok][k].tolist(),
                         "x1": x2[ok][k].tolist(), "y1": y2[ok][k].tolist()})
    return AxiomReport(not failures, float(diag.max()), pos_min, lip, failures)


# -- Dini derivative ------------------------------------------------------------------------


@dataclass
class DiniResult:
    value: float
    quotients: list
    h_values: list
    spread: float
    ill_conditioned: bool


def dini_derivative(prob: VolterraProblem, spec: LyapunovSpec, t: float, x_traj: Trajectory,
                    y_traj: Trajectory, h_values=DEFAULT_H_VALUES) -> DiniResult:
    """Backward difference quotient of ``V`` along the flow,

        (V(t, x, y) - V(t - h, x - h*H(t, x, Kx), y - h*H(t, y, Ky))) / h,

    at each ``h``, extrapolated linearly to ``h = 0`` from the two smallest steps.
    """
    hs = sorted((float(h) for h in h_values), reverse=True)
    if len(hs) < 2 or hs[-1] <= 0:
        raise ValueError("need at least two positive h values")
    if t - hs[0] < 0:
        raise ValueError(f"t - max(h) = {t - hs[0]:g} < 0")
    x, y = x_traj(t), y_traj(t)
    fx = prob.field(t, x, eval_K_operator(prob, x_traj, t))
    fy = prob.field(t, y, eval_K_operator(prob, y_traj, t))
    v = spec.value(t, x, y)
    h = np.array(hs)
    q = (v - spec.value(t - h, x - h[:, None] * fx, y - h[:, None] * fy)) / h
    h1, h2 = hs[-2], hs[-1]
    q1, q2 = float(q[-2]), float(q[-1])
    value = (h1 * q2 - h2 * q1) / (h1 - h2)
    scale = max(abs(q1), abs(q2))
    spread = abs(q2 - q1) / scale if scale > 0 else 0.0
    dq = np.diff(q)
    monotone = bool(np.all(dq >= 0) or np.all(dq <= 0))
    wobble = float(np.ptp(q)) / scale if scale > 0 else 0.0
    ill = spread > DINI_RTOL or (not monotone and wobble > DINI_RTOL)
    return DiniResult(float(value), q.tolist(), hs, spread, ill)


# -- dissipativity ----------------------------------------------------------------------------


@dataclass
class DissipativeReport:
    passed: bool
    max_excess: float
    witness: dict
    t_samples: list
    lhs: list
    rhs: list
    S_max: float
    S_bound_ok: bool
    in_ball: bool
    ill_conditioned: list = field(default_factory=list)

    def to_dict(self):
        return dict(self.__dict__)


def _V_along(spec, times, x_traj, y_traj):
    return spec.value(times, x_traj(times), y_traj(times))


def check_dissipative(prob: VolterraProblem, spec: LyapunovSpec, x_traj: Trajectory, y_traj: Trajectory,
                      t_samples, h_values=DEFAULT_H_VALUES, tol: float = 1e-4, N: float | None = None
                      ) -> DissipativeReport:
    """Compare ``D(V)`` with ``g(t, V, integral_0^t S(t, s, V(s, x(s), y(s))) ds)`` at each sample time.

    ``passed`` needs ``max(lhs - rhs) <= tol``, ``|S| <= S0`` on the sampled arguments and both
    trajectories inside ``x0 + N*B``.
    """
    N = N or prob.N
    in_ball = bool(
        np.max(gauge(x_traj.states - prob.x0, prob.B)) <= N * (1 + 1e-12)
        and np.max(gauge(y_traj.states - prob.x0, prob.B)) <= N * (1 + 1e-12)
    )
    lhs, rhs, ill = [], [], []
    s_max = 0.0
    for t in t_samples:
        t = float(t)
        d = dini_derivative(prob, spec, t, x_traj, y_traj, h_values)
        nodes = x_traj.times[x_traj.times < t - 1e-12 * max(1.0, t)]
        nodes = np.append(nodes, t) if len(nodes) else np.array([0.0, t])
        v_nodes = _V_along(spec, nodes, x_traj, y_traj)
        s_vals = spec.memory_kernel(t, nodes, v_nodes)
        s_max = max(s_max, float(np.max(np.abs(s_vals))))
        w = float(quadrature.trapezoid_weights(nodes) @ s_vals) if t > 0 else 0.0
        lhs.append(d.value)
        rhs.append(spec.comparison(t, v_nodes[-1], w))
        if d.ill_conditioned:
            ill.append(t)
    excess = np.array(lhs) - np.array(rhs)
    i = int(np.argmax(excess))
    t_i = float(t_samples[i])
    witness = {"t": t_i, "lhs": lhs[i], "rhs": rhs[i], "excess": float(excess[i]),
               "V": float(spec.value(t_i, x_traj(t_i), y_traj(t_i)))}
    s_ok = s_max <= spec.S0 * (1 + 1e-12)
    passed = bool(excess[i] <= tol and s_ok and in_ball)
    return DissipativeReport(passed, float(excess[i]), witness, [float(t) for t in t_samples],
                             lhs, rhs, s_max, s_ok, in_ball, ill)


# -- epsilon approximations -----------------------------------------------------------------


@dataclass
class EpsApproxSequence:
    epsilons: list
    trajectories: list
    defects: list


def generate_eps_approximations(prob: VolterraProblem, cfg: SolveConfig, epsilons,
                                cert: BoundsCertificate | None = None, samples: int = 2000,
                                seed: int = 0) -> EpsApproxSequence:
    """One trajectory per ``eps``: successive approximations stopped at ``eps/2``, then the
    integral-equation defect is measured directly and must not exceed ``eps``."""
    eps = [float(e) for e in epsilons]
    if not eps or any(not 0 < e < 1 for e in eps):
        raise ValueError("epsilons must lie in (0, 1)")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    if cert is None:
        cert = certify(prob, samples, seed)
    if cert.K0 > 1:
        warnings.warn(f"K0 = {cert.K0:g} > 1: the Lyapunov setting assumes K0*B inside B", stacklevel=2)
    trajs, defects = [], []
    for e in eps:
        traj, _ = solve(prob, cert, replace(cfg, tol=e / 2))
        defect = fixed_point_residual(prob, traj)
        if defect > e:
            raise DefectError(f"defect {defect:.3g} exceeds eps = {e:.3g}", e, defect, traj)
        trajs.append(traj)
        defects.append(defect)
    return EpsApproxSequence(eps, trajs, defects)


@dataclass
class MutualReport:
    M: list
    tail: list
    tail_decreasing: bool
    B_dist: list
    D_dist: list
    D_tail: list
    D_tail_decreasing: bool
    upper_const: float
    dominated: bool
    limit_distance: float | None
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


def _pairwise(trajs, fn):
    k = len(trajs)
    out = np.zeros((k, k))
    for n in range(k):
        for m in range(k):
            if n != m:
                out[n, m] = fn(trajs[n], trajs[m])
    return out


def _tails(M):
    k = len(M)
    return [float(M[n0:, n0:].max()) for n0 in range(k - 1)]


def _decays(tail):
    nonincreasing = all(b <= a * (1 + 1e-12) for a, b in zip(tail, tail[1:]))
    return bool(nonincreasing and (tail[-1] < tail[0] or tail[0] == 0))


def check_mutual_convergence(seq: EpsApproxSequence, spec: LyapunovSpec, B: Disk, D: Disk,
                             baseline: Trajectory | None = None, samples: int = 2000, seed: int = 0
                             ) -> MutualReport:
    """Pairwise ``M[n][m] = sup_t V(t, x_n(t), x_m(t))`` plus the same sup distances in the
    gauges of ``B`` and of the larger disk ``D``; both must decay along the sequence, and
    ``D``-distances must stay below ``upper_const`` times ``B``-distances."""
    trajs = seq.trajectories
    if len(trajs) < 3:
        raise ValueError("need at least three trajectories")
    nodes = trajs[0].times
    states = [tr(nodes) for tr in trajs]
    idx = list(range(len(trajs)))

    M = _pairwise(idx, lambda a, b: float(np.max(spec.value(nodes, states[a], states[b]))))
    Bd = _pairwise(idx, lambda a, b: float(np.max(gauge(states[a] - states[b], B))))
    Dd = _pairwise(idx, lambda a, b: float(np.max(gauge(states[a] - states[b], D))))
    upper = check_strict_mackey(B, D, B, samples, seed).upper_const
    dominated = bool(np.all(Dd <= upper * Bd * (1 + 1e-9) + 1e-300))
    tail, d_tail = _tails(M), _tails(Dd)
    limit = None
    if baseline is not None:
        limit = compare(trajs[-1], baseline, B)
    passed = _decays(tail) and _decays(d_tail) and dominated
    return MutualReport(M.tolist(), tail, _decays(tail), Bd.tolist(), Dd.tolist(), d_tail,
                        _decays(d_tail), upper, dominated, limit, passed)
