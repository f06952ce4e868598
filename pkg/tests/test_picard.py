import math

import numpy as np
import pytest

from conftest import catalog_cert, catalog_problem
from volterra_ide.catalog import exact_solution
from volterra_ide.errors import BallExitError, NonConvergenceError
from volterra_ide.gauge import Disk, gauge
from volterra_ide.oracle import compare
from volterra_ide.picard import (
    SolveConfig,
    eta,
    fixed_point_residual,
    picard_step,
    solve,
    solve_segment,
    verify_uniqueness,
)
from volterra_ide.problem import BoundsCertificate, VolterraProblem
from volterra_ide.trajectory import Trajectory, uniform_grid


def test_eta_values():
    assert eta(1.0, 2.0, 1.0) == 0.25
    assert eta(0.1, 1.0, 1.0) == 0.1
    assert eta(3.0, 0.0, 7.0) == 3.0
    assert eta(1.0, 1.0, 0.5) == 0.25
    with pytest.raises(ValueError):
        eta(1.0, -1.0)
    with pytest.raises(ValueError):
        eta(0.0, 1.0)


def test_config_validation():
    for bad in (dict(h=0), dict(tol=-1), dict(max_iter=0), dict(N=0), dict(sigma_policy=1.5)):
        with pytest.raises(ValueError):
            SolveConfig(**bad)


def test_sinh_solution(sinh):
    prob, cert = sinh
    traj, rep = solve(prob, cert, SolveConfig())
    assert rep.converged and rep.eta == pytest.approx(1 / 3)
    assert traj.t_end == rep.eta == rep.t_end
    err = np.max(np.abs(traj.states[:, 0] - np.sinh(traj.times)))
    assert err < 1e-7
    assert rep.iterate_deltas[-1] < 1e-10
    assert json_safe(rep.to_dict())


def json_safe(d):
    import json
    return json.loads(json.dumps(d)) == d


def test_iterate_deltas_contract(sinh):
    prob, cert = sinh
    _, rep = solve(prob, cert, SolveConfig(tol=1e-12))
    d = rep.iterate_deltas
    # geometric decay, at least as fast as the contraction bound on [0, 1/3]
    assert all(b < a for a, b in zip(d, d[1:]))
    assert max(b / a for a, b in zip(d, d[1:])) < 0.5


def test_taylor_iterates():
    prob = catalog_problem("exp")
    times = uniform_grid(0.0, 1.0, 1e-3)
    cur = Trajectory(times, np.ones((len(times), 1)))
    for m in range(1, 9):
        cur = picard_step(prob, cur)
        partial = sum(1 / math.factorial(k) for k in range(m + 1))
        assert abs(cur.states[-1, 0] - partial) <= 5e-6


def test_picard_step_needs_zero_start():
    prob = catalog_problem("exp")
    with pytest.raises(ValueError):
        picard_step(prob, Trajectory([0.5, 1.0], [[1.0], [1.0]]))


def test_residual_of_exact_grid_solution():
    prob = catalog_problem("exp")
    times = uniform_grid(0.0, 1 / 6, 1e-3)
    exact = Trajectory(times, np.exp(times)[:, None])
    # the exact solution is only an O(h^2) fixed point of the discrete map
    assert fixed_point_residual(prob, exact) < 1e-7
    off = Trajectory(times, np.exp(times)[:, None] + 0.01)
    assert fixed_point_residual(prob, off) > 4e-3


def test_multi_segment_matches_single(sinh):
    prob, cert = sinh
    one, r1 = solve(prob, cert, SolveConfig())
    many, rm = solve(prob, cert, SolveConfig(sigma_policy=0.4))
    assert len(r1.segments) == 1 and len(rm.segments) > 3
    assert np.array_equal(one.times, many.times)
    assert compare(one, many, prob.B) <= 1e-9
    ends = [s["sigma_end"] for s in rm.segments]
    starts = [s["sigma_start"] for s in rm.segments]
    assert starts[0] == 0 and ends[-1] == rm.eta and starts[1:] == ends[:-1]
    # interior boundaries sit on the h grid
    for b in ends[:-1]:
        assert abs(b / 1e-3 - round(b / 1e-3)) < 1e-6
    assert all("y_sigma" in s for s in rm.segments)


def test_ball_containment(sinh):
    prob, cert = sinh
    cfg = SolveConfig()
    traj, rep = solve(prob, cert, cfg)
    g = np.max(gauge(traj.states - prob.x0, prob.B))
    assert g == rep.ball_margin
    assert g <= cert.H0 * rep.eta + cfg.tol <= prob.N / 2 + cfg.tol


def test_nonconvergence_partial(sinh):
    prob, cert = sinh
    with pytest.raises(NonConvergenceError) as info:
        solve(prob, cert, SolveConfig(max_iter=2))
    traj, rep = info.value.partial
    assert traj is None and not rep.converged
    assert len(info.value.deltas) == 2


def test_ball_exit_detected():
    # an understated H0 lets eta reach T = 1, but e^t - 1 leaves x0 + 0.5*B at t = ln 2
    prob = catalog_problem("exp")
    cert = BoundsCertificate(0.0, 0.01, 0.0, 1.0, 0, 0, {})
    with pytest.raises(BallExitError) as info:
        solve(prob, cert, SolveConfig(N=0.5))
    assert info.value.gauge_value > 0.5
    assert info.value.partial[1].converged is False


def test_segment_contract_checks(sinh):
    prob, _ = sinh
    with pytest.raises(ValueError):
        solve_segment(prob, 0.2, 0.1, prob.x0, None, SolveConfig())
    with pytest.raises(ValueError):
        solve_segment(prob, 0.1, 0.2, prob.x0, None, SolveConfig())


def test_uniqueness(sinh):
    prob, cert = sinh
    worst = verify_uniqueness(prob, SolveConfig(), 0.3, 3, seed=1, cert=cert)
    assert worst <= 1e-9


def test_fixed_T_mode():
    # x' = int_0^T x ds with x0 = 1, T = 1: x(t) = 1 + c t with c = int_0^1 (1 + c s) ds => c = 2
    prob = VolterraProblem(lambda t, x, y: y, lambda t, s, u: u, [1.0], 1.0,
                           Disk("inf", (1.0,), 4.0), N=1.0, upper_limit_mode="fixed_T")
    cert = BoundsCertificate(1.0, 0.5, 1.0, 1.0, 0, 0, {})
    traj, rep = solve(prob, cert, SolveConfig())
    assert len(rep.segments) == 1 and traj.t_end == 1.0
    assert np.max(np.abs(traj.states[:, 0] - (1 + 2 * traj.times))) < 1e-9


def test_base_topology_domination(sinh):
    prob, cert = sinh
    ref = Disk(2, (1.0,), 1.0)
    _, rep = solve(prob, cert, SolveConfig(ref=ref))
    bt = rep.base_topology
    assert bt["dominated"] and bt["upper_const"] == pytest.approx(2.0)


@pytest.mark.parametrize("name", ["sinh", "exp", "zero", "contractive"])
def test_catalog_exact(name):
    prob, cert = catalog_problem(name), catalog_cert(name)
    traj, _ = solve(prob, cert, SolveConfig())
    exact = exact_solution(name)(traj.times)
    assert np.max(np.abs(traj.states[:, 0] - exact)) < 1e-6
