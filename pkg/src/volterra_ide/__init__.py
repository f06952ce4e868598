"""Successive approximations for Volterra integro-differential equations
``x'(t) = H(t, x(t), (Kx)(t))`` on a gauge ball, with Lyapunov-style checks."""
from .errors import (
    BallExitError,
    BoundViolation,
    DefectError,
    EvaluationError,
    NonConvergenceError,
    OutOfRangeError,
    PreconditionError,
    SolveError,
)
from .gauge import Disk, check_strict_mackey, gauge, sample_boundary, sample_disk, scale_disk
from .lyapunov import (
    LyapunovSpec,
    check_dissipative,
    check_mutual_convergence,
    check_V_axioms,
    dini_derivative,
    gauge_spec,
    generate_eps_approximations,
)
from .oracle import OracleConfig, compare, reference_solve
from .picard import SolveConfig, SolveReport, eta, fixed_point_residual, picard_step, solve, verify_uniqueness
from .problem import BoundsCertificate, VolterraProblem, certify, eval_K_operator, verify_A1, verify_A2
from .trajectory import Trajectory

__version__ = "0.1.0"
