"""Reference solver used to cross-check the successive-approximation results.

It marches ``x' = H(t, x, y(t))`` with classical RK4 and keeps ``y = Kx`` as a
running trapezoid sum over the computed history, closing each stage with a
partial panel that uses the stage state.  A different discretisation family
from the Picard solver, so agreement between the two is evidence.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quadrature
from .gauge import Disk, gauge
from .problem import VolterraProblem
from .trajectory import Trajectory, uniform_grid


@dataclass(frozen=True)
class OracleConfig:
    h_fine: float = 1e-4
    scheme: str = "rk4_trapezoid"
    max_sweeps: int = 200  # fixed_T only
    sweep_tol: float = 1e-13

    def __post_init__(self):
        if not self.h_fine > 0:
            raise ValueError("h_fine must be positive")
        if self.scheme != "rk4_trapezoid":
            raise ValueError(f"unknown oracle scheme {self.scheme!r}")


def reference_solve(prob: VolterraProblem, cfg: OracleConfig = OracleConfig(), horizon: float | None = None) -> Trajectory:
    horizon = prob.T if horizon is None else float(horizon)
    if not 0 < horizon <= prob.T * (1 + 1e-12):
        raise ValueError(f"horizon must lie in (0, T]; got {horizon!r}")
    if prob.upper_limit_mode == "variable_t":
        return _march_volterra(prob, uniform_grid(0.0, horizon, cfg.h_fine))
    return _march_fixed(prob, cfg, horizon)


def _march_volterra(prob, times):
    n = prob.dim
    X = np.zeros((len(times), n))
    X[0] = prob.x0
    for i in range(len(times) - 1):
        t0, t1 = times[i], times[i + 1]
        dt = t1 - t0
        tm = t0 + dt / 2
        taus = np.array([t0, tm, t1])
        # history integrals over [0, t_i] at the three stage times
        w = quadrature.trapezoid_weights(times[: i + 1])
        hist_K = prob.kernel(taus[:, None], times[None, : i + 1],
                             np.broadcast_to(X[: i + 1], (3, i + 1, n)))
        hist = np.einsum("j,ijk->ik", w, hist_K)
        k_ti = hist_K[:, i]  # K(tau, t_i, x_i)

        def y(stage, tau, x_tau):
            tail = prob.kernel(tau, tau, x_tau)
            return hist[stage] + (tau - t0) / 2 * (k_ti[stage] + tail)

        x = X[i]
        k1 = prob.field(t0, x, hist[0])
        x2 = x + dt / 2 * k1
        k2 = prob.field(tm, x2, y(1, tm, x2))
        x3 = x + dt / 2 * k2
        k3 = prob.field(tm, x3, y(1, tm, x3))
        x4 = x + dt * k3
        k4 = prob.field(t1, x4, y(2, t1, x4))
        X[i + 1] = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return Trajectory(times, X)


def _march_fixed(prob, cfg, horizon):
    """fixed_T memory needs the whole path; sweep RK4 with the memory frozen from the last sweep."""
    full = uniform_grid(0.0, prob.T, cfg.h_fine)
    n = prob.dim
    w = quadrature.trapezoid_weights(full)
    mids = full[:-1] + np.diff(full) / 2
    X = np.broadcast_to(prob.x0, (len(full), n)).copy()

    def memory(taus, states):
        out = np.empty((len(taus), n))
        chunk = max(1, 2_000_000 // (len(full) * n))
        for a in range(0, len(taus), chunk):
            tt = taus[a:a + chunk]
            vals = prob.kernel(tt[:, None], full[None, :], np.broadcast_to(states, (len(tt),) + states.shape))
            out[a:a + chunk] = np.einsum("j,ijk->ik", w, vals)
        return out

    for _ in range(cfg.max_sweeps):
        y_nodes = memory(full, X)
        y_mids = memory(mids, X)
        Xn = np.empty_like(X)
        Xn[0] = prob.x0
        for i in range(len(full) - 1):
            t0, t1 = full[i], full[i + 1]
            dt, tm = t1 - t0, mids[i]
            x = Xn[i]
            k1 = prob.field(t0, x, y_nodes[i])
            k2 = prob.field(tm, x + dt / 2 * k1, y_mids[i])
            k3 = prob.field(tm, x + dt / 2 * k2, y_mids[i])
            k4 = prob.field(t1, x + dt * k3, y_nodes[i + 1])
            Xn[i + 1] = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        change = np.max(np.abs(Xn - X))
        X = Xn
        if change < cfg.sweep_tol:
            break
    traj = Trajectory(full, X)
    if horizon >= prob.T * (1 - 1e-12):
        return traj
    keep = full[full < horizon]
    return Trajectory(np.append(keep, horizon), np.vstack([X[: len(keep)], traj(horizon)]))


def compare(a: Trajectory, b: Trajectory, B: Disk) -> float:
    """Sup over the coarser grid's nodes (inside the common span) of ``gauge(a(t) - b(t), B)``."""
    lo = max(a.t_start, b.t_start)
    hi = min(a.t_end, b.t_end)
    if lo > hi:
        raise ValueError(f"trajectories have disjoint spans [{a.t_start:g}, {a.t_end:g}] "
                         f"and [{b.t_start:g}, {b.t_end:g}]")
    coarse = a if (a.t_end - a.t_start) / len(a) >= (b.t_end - b.t_start) / len(b) else b
    nodes = coarse.times[(coarse.times >= lo) & (coarse.times <= hi)]
    if len(nodes) == 0:
        nodes = np.array([lo])
    return float(np.max(gauge(a(nodes) - b(nodes), B)))
