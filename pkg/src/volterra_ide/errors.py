"""Exception types shared across the solver modules."""


class PreconditionError(ValueError):
    """A documented precondition of an operation does not hold."""


class OutOfRangeError(ValueError):
    """A time argument falls outside the span covered by a trajectory."""


class EvaluationError(ArithmeticError):
    """A field or kernel map produced a non-finite value (or could not be evaluated).

    ``witness`` holds the arguments at which it happened, e.g. ``{"t": 0.1, "s": 0.05}``.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = dict(witness or {})


class BoundViolation(Exception):
    """A claimed bound was refuted by a concrete sample point."""

    def __init__(self, name, claimed, observed, witness):
        super().__init__(
            f"claimed {name} = {claimed:g} refuted: observed {observed:.6g} at {witness}"
        )
        self.name = name
        self.claimed = claimed
        self.observed = observed
        self.witness = witness


class SolveError(RuntimeError):
    """Base for solver failures; ``partial`` carries whatever was computed before the failure."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NonConvergenceError(SolveError):
    def __init__(self, message, deltas, partial=None):
        super().__init__(message, partial)
        self.deltas = list(deltas)


class BallExitError(SolveError):
    def __init__(self, message, time, gauge_value, partial=None):
        super().__init__(message, partial)
        self.time = time
        self.gauge_value = gauge_value


class DefectError(SolveError):
    """A trajectory failed its epsilon-approximation defect certification."""

    def __init__(self, message, epsilon, defect, partial=None):
        super().__init__(message, partial)
        self.epsilon = epsilon
        self.defect = defect
