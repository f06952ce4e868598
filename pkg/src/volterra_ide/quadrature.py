"""Composite quadrature weights on (almost) uniform node sets."""
import numpy as np

RULES = ("trapezoid", "simpson")


def trapezoid_weights(nodes):
    nodes = np.asarray(nodes, dtype=float)
    w = np.zeros(len(nodes))
    if len(nodes) < 2:
        return w
    dt = np.diff(nodes)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


def _uniform_run(dt, rtol=1e-9):
    """Length of the leading run of intervals equal to the first one."""
    if len(dt) == 0:
        return 0
    same = np.abs(dt - dt[0]) <= rtol * abs(dt[0])
    return len(dt) if same.all() else int(np.argmin(same))


def simpson_weights(nodes):
    """Composite Simpson on the leading uniform run of an even number of panels;
    a leftover odd panel and any short tail panels get the trapezoid rule."""
    nodes = np.asarray(nodes, dtype=float)
    w = np.zeros(len(nodes))
    if len(nodes) < 2:
        return w
    dt = np.diff(nodes)
    m = _uniform_run(dt)
    m -= m % 2
    if m:
        h = dt[0]
        coef = np.ones(m + 1)
        coef[1:-1:2] = 4.0
        coef[2:-1:2] = 2.0
        w[: m + 1] += coef * h / 3
    w[m:] += trapezoid_weights(nodes[m:])
    return w


def weights(nodes, rule="trapezoid"):
    """Weights ``w`` with ``sum(w * f(nodes))`` approximating the integral over the node span."""
    if rule == "trapezoid":
        return trapezoid_weights(nodes)
    if rule == "simpson":
        return simpson_weights(nodes)
    raise ValueError(f"unknown quadrature rule {rule!r}; expected one of {RULES}")


def cumulative_weights(nodes, rule="trapezoid"):
    """Lower-triangular matrix ``W`` with row ``i`` integrating over ``[nodes[0], nodes[i]]``."""
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    W = np.zeros((n, n))
    if rule == "trapezoid":
        dt = np.diff(nodes)
        for i in range(1, n):
            W[i, :i] += dt[:i] / 2
            W[i, 1 : i + 1] += dt[:i] / 2
        return W
    for i in range(1, n):
        W[i, : i + 1] = weights(nodes[: i + 1], rule)
    return W
