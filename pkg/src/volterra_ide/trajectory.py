"""Piecewise-linear trajectories on a time grid, with CSV round-tripping."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRangeError

_SPAN_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States ``states[i]`` at increasing ``times[i]``; linear between nodes.

    Grids are uniform with step ``h`` except that the final step may be shorter.
    """

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        x = np.array(self.states, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("a trajectory needs at least two nodes")
        if x.shape[0] != len(t):
            raise ValueError(f"{len(t)} times but {x.shape[0]} states")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise ValueError("trajectory contains non-finite values")
        t.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", x)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self):
        return len(self.times)

    def covers(self, a, b) -> bool:
        slack = _SPAN_RTOL * max(1.0, abs(self.t_end))
        return self.t_start - slack <= a and b <= self.t_end + slack

    def __call__(self, t):
        """Interpolated state(s); ``t`` scalar gives ``(n,)``, an array gives ``(len(t), n)``."""
        tt = np.asarray(t, dtype=float)
        flat = np.atleast_1d(tt)
        if flat.size and not self.covers(flat.min(), flat.max()):
            raise OutOfRangeError(
                f"time(s) in [{flat.min():g}, {flat.max():g}] outside trajectory span "
                f"[{self.t_start:g}, {self.t_end:g}]"
            )
        flat = np.clip(flat, self.t_start, self.t_end)
        k = np.clip(np.searchsorted(self.times, flat, side="right") - 1, 0, len(self.times) - 2)
        t0, t1 = self.times[k], self.times[k + 1]
        lam = ((flat - t0) / (t1 - t0))[:, None]
        out = (1 - lam) * self.states[k] + lam * self.states[k + 1]
        return out[0] if tt.ndim == 0 else out

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x{i}" for i in range(self.dim)])
            for t, x in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in x])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1:])


def uniform_grid(a: float, b: float, h: float) -> np.ndarray:
    """Nodes ``k*h`` strictly inside ``(a, b)`` bracketed by ``a`` and ``b``.

    Interior nodes are integer multiples of ``h`` so grids of adjacent segments (and of a
    single segment over their union) coincide exactly.  The last step may be short; a step
    shorter than ``1e-9*h`` is merged into its neighbour.
    """
    if not (b > a):
        raise ValueError(f"empty interval [{a}, {b}]")
    if not h > 0:
        raise ValueError("step h must be positive")
    eps = 1e-9
    k0 = int(np.floor(a / h + eps)) + 1
    k1 = int(np.ceil(b / h - eps)) - 1
    inner = np.arange(k0, k1 + 1) * h if k1 >= k0 else np.empty(0)
    inner = inner[(inner > a + eps * h) & (inner < b - eps * h)]
    return np.concatenate([[a], inner, [b]])
