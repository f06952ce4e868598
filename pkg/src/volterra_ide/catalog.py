"""Builtin problem instances, each with a closed-form solution for testing."""
import copy

import numpy as np

_DISK = {"p": "inf", "weights": [1.0], "radius": 2.0}
_LYAP = {"V": "abs(x[0] - y[0])", "g": "0", "S": "0", "S0": 1.0, "L_V": 2.0}

CATALOG = {
    # x' = 1 + int_0^t x, x(0) = 0, i.e. x'' = x with x'(0) = 1
    "sinh": {"dim": 1, "x0": [0.0], "T": 1.0, "disk": _DISK, "N": 1.0,
             "H": ["1 + y[0]"], "K": ["u[0]"]},
    "exp": {"dim": 1, "x0": [1.0], "T": 1.0, "disk": _DISK, "N": 1.0,
            "H": ["x[0]"], "K": ["0"]},
    "zero": {"dim": 1, "x0": [0.5], "T": 1.0, "disk": _DISK, "N": 1.0,
             "H": ["0"], "K": ["0"]},
    "contractive": {"dim": 1, "x0": [1.0], "T": 1.0, "disk": _DISK, "N": 1.0,
                    "H": ["-x[0]"], "K": ["0"], "lyapunov": _LYAP},
    "expansive": {"dim": 1, "x0": [1.0], "T": 1.0, "disk": _DISK, "N": 1.0,
                  "H": ["x[0]"], "K": ["0"], "lyapunov": _LYAP},
}

EXACT = {
    "sinh": lambda t: np.sinh(t),
    "exp": lambda t: np.exp(t),
    "zero": lambda t: np.full_like(np.asarray(t, dtype=float), 0.5),
    "contractive": lambda t: np.exp(-np.asarray(t)),
    "expansive": lambda t: np.exp(t),
}


def entry(name: str) -> dict:
    """A deep copy of the instance dictionary for ``name``."""
    try:
        return copy.deepcopy(CATALOG[name])
    except KeyError:
        raise KeyError(f"unknown catalog problem {name!r}; known: {', '.join(CATALOG)}") from None


def exact_solution(name: str):
    return EXACT[name]
