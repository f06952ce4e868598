"""Command-line entry point.

Exit codes: 0 success, 1 input/schema error, 2 check failed (witness reported),
3 partial solve.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .errors import BoundViolation, EvaluationError, SolveError
from .gauge import scale_disk
from .instance import InstanceError, load
from .lyapunov import (
    check_dissipative,
    check_mutual_convergence,
    check_V_axioms,
    generate_eps_approximations,
)
from .oracle import OracleConfig, compare, reference_solve
from .picard import SolveConfig, solve
from .problem import BoundsCertificate, certify

EXIT_OK, EXIT_INPUT, EXIT_CHECK, EXIT_PARTIAL = 0, 1, 2, 3


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, allow_nan=False, default=_jsonable)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _solve_config(inst, args) -> SolveConfig:
    s = dict(inst.solver)
    for key, flag in (("h", args.h), ("tol", args.tol), ("max_iter", args.max_iter)):
        if flag is not None:
            s[key] = flag
    return SolveConfig(**s)


def _certificate(inst, args) -> BoundsCertificate:
    path = getattr(args, "cert", None)
    if path:
        try:
            with open(path) as fh:
                return BoundsCertificate.from_dict(json.load(fh))
        except (OSError, ValueError, KeyError) as exc:
            raise InstanceError(f"cannot load certificate {path}: {exc}") from None
    return certify(inst.problem, args.samples, args.seed)


def cmd_verify_bounds(args) -> int:
    inst = load(args.instance)
    try:
        cert = certify(inst.problem, args.samples, args.seed, claims=inst.claims)
    except BoundViolation as exc:
        print(_dump({"violation": {"bound": exc.name, "claimed": exc.claimed,
                                   "observed": exc.observed, "witness": exc.witness}}))
        return EXIT_CHECK
    except EvaluationError as exc:
        print(_dump({"evaluation_error": str(exc), "witness": exc.witness}))
        return EXIT_CHECK
    out = f"{args.out}.cert.json" if args.out else None
    print(_dump(cert.to_dict(), out))
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load(args.instance)
    cfg = _solve_config(inst, args)
    cert = _certificate(inst, args)
    prefix = args.out or "solution"
    try:
        traj, report = solve(inst.problem, cert, cfg)
    except (SolveError, EvaluationError) as exc:
        traj, report = (exc.partial if isinstance(getattr(exc, "partial", None), tuple) else (None, None))
        payload = report.to_dict() if report is not None else {"converged": False}
        payload["error"] = str(exc)
        if hasattr(exc, "deltas"):
            payload["delta_history"] = exc.deltas
        if hasattr(exc, "witness"):
            payload["witness"] = exc.witness
        if traj is not None:
            traj.to_csv(f"{prefix}.csv")
        _dump(payload, f"{prefix}.report.json")
        print(f"partial solve: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    traj.to_csv(f"{prefix}.csv")
    _dump(report.to_dict(), f"{prefix}.report.json")
    print(f"solved on [0, {report.t_end:.6g}] (eta = {report.eta:.6g}) in {len(report.segments)} segment(s)")
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    inst = load(args.instance)
    if inst.lyapunov is None:
        raise InstanceError("instance has no 'lyapunov' section")
    prob, spec = inst.problem, inst.lyapunov
    cfg = _solve_config(inst, args)
    N = cfg.N or prob.N
    out = {}
    try:
        cert = certify(prob, args.samples, args.seed)
        axioms = check_V_axioms(spec, prob.B, args.samples, args.seed, center=prob.x0, scale=N, T=prob.T)
        x_traj, _ = solve(prob, cert, cfg)
        shift = np.zeros(prob.dim)
        shift[0] = 0.25 * N * prob.B.weights[0] * prob.B.radius
        y_traj, _ = solve(replace(prob, x0=prob.x0 + shift), cert, cfg)
        t_end = min(x_traj.t_end, y_traj.t_end)
        h_max = min(1e-2, t_end / 2)
        h_values = [h_max * 10.0 ** -k for k in range(4)]
        t_samples = np.linspace(max(h_max, 0.1 * t_end), t_end, 8)
        diss = check_dissipative(prob, spec, x_traj, y_traj, t_samples, h_values, N=N)
        eps = [2.0 ** -n for n in range(1, 9)]
        seq = generate_eps_approximations(prob, cfg, eps, cert)
        mutual = check_mutual_convergence(seq, spec, prob.B, scale_disk(prob.B, 2.0), baseline=x_traj,
                                          samples=args.samples, seed=args.seed)
    except (SolveError, EvaluationError) as exc:
        out["error"] = str(exc)
        _dump(out, f"{args.out or 'lyapunov'}.lyapunov.json")
        print(f"lyapunov pipeline failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    out.update({
        "certificate": cert.to_dict(),
        "axioms": axioms.to_dict(),
        "dissipative": diss.to_dict(),
        "eps_approximations": {"epsilons": seq.epsilons, "defects": seq.defects},
        "mutual_convergence": mutual.to_dict(),
    })
    out["passed"] = bool(axioms.passed and diss.passed and mutual.passed)
    _dump(out, f"{args.out or 'lyapunov'}.lyapunov.json")
    summary = {"passed": out["passed"], "axioms": axioms.passed, "dissipative": diss.passed,
               "mutual_convergence": mutual.passed}
    if not axioms.passed:
        summary["axiom_failures"] = axioms.failures
    if not diss.passed:
        summary["dissipative_witness"] = diss.witness
    print(_dump(summary))
    return EXIT_OK if out["passed"] else EXIT_CHECK


def cmd_oracle_compare(args) -> int:
    inst = load(args.instance)
    cfg = _solve_config(inst, args)
    cert = certify(inst.problem, args.samples, args.seed)
    h_fine = args.h_fine or inst.oracle.get("h_fine") or cfg.h / 10
    tolerance = args.tolerance or inst.oracle.get("tolerance") or 1e-4
    try:
        traj, report = solve(inst.problem, cert, cfg)
        ref = reference_solve(inst.problem, OracleConfig(h_fine), traj.t_end)
    except (SolveError, EvaluationError) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    dist = compare(traj, ref, inst.problem.B)
    payload = {"sup_distance": dist, "tolerance": tolerance, "eta": report.eta, "t_end": traj.t_end,
               "h": cfg.h, "h_fine": h_fine, "passed": dist <= tolerance}
    print(_dump(payload, f"{args.out}.compare.json" if args.out else None))
    return EXIT_OK if dist <= tolerance else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="volterra-ide", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, solver=True):
        p.add_argument("instance", help="instance JSON file")
        p.add_argument("--samples", type=int, default=2000)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out", help="output path prefix")
        if solver:
            p.add_argument("--h", type=float)
            p.add_argument("--tol", type=float)
            p.add_argument("--max-iter", type=int, dest="max_iter")

    p = sub.add_parser("verify-bounds", help="sample the bound certificate (K0, H0, k1, L)")
    common(p, solver=False)
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("solve", help="successive approximations on [0, eta]")
    common(p)
    p.add_argument("--cert", help="certificate JSON from verify-bounds (default: computed inline)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("lyapunov", help="Lyapunov-dissipative checks and eps-approximations")
    common(p)
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("oracle-compare", help="compare against the reference solver")
    common(p)
    p.add_argument("--h-fine", type=float, dest="h_fine")
    p.add_argument("--tolerance", type=float)
    p.set_defaults(func=cmd_oracle_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
