import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volterra_ide.errors import PreconditionError
from volterra_ide.gauge import (
    Disk,
    check_strict_mackey,
    contains,
    disk_inclusion_margin,
    gauge,
    n_extreme_points,
    norm_ratio_bounds,
    sample_boundary,
    sample_disk,
    sample_pairs,
    scale_disk,
)


def member(x, B):
    """Membership straight from the definition, without the gauge formula."""
    return np.linalg.norm(np.asarray(x) / B.w, ord=B.p) <= B.radius


def bisection_gauge(x, B, iters=200):
    lo, hi = 0.0, 1.0
    while not member(x, scale_disk(B, hi)):
        hi *= 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid > 0 and member(x, scale_disk(B, mid)):
            hi = mid
        else:
            lo = mid
    return hi


def test_closed_forms():
    assert gauge([3.0, -4.0], Disk(2, (1, 1))) == 5.0
    assert gauge([3.0, -4.0], Disk(1, (1, 1))) == 7.0
    assert gauge([3.0, -4.0], Disk("inf", (1, 1))) == 4.0
    assert gauge([3.0, -4.0], Disk(math.inf, (1, 2), radius=2.0)) == 1.5
    assert gauge([0.0, 0.0], Disk(2, (1, 1))) == 0.0


def test_batch_shape():
    B = Disk(2, (1.0, 2.0, 0.5))
    x = np.ones((4, 5, 3))
    g = gauge(x, B)
    assert g.shape == (4, 5)
    assert np.allclose(g, gauge(np.ones(3), B))


def test_scalar_in_one_dim():
    assert gauge(-3.0, Disk(1, (2.0,))) == 1.5


@pytest.mark.parametrize("bad", [
    dict(p=3, weights=(1,)),
    dict(p=2, weights=()),
    dict(p=2, weights=(1, 0)),
    dict(p=2, weights=(1, -1)),
    dict(p=2, weights=(1,), radius=0),
    dict(p=2, weights=(1,), radius=float("inf")),
])
def test_disk_validation(bad):
    with pytest.raises(ValueError):
        Disk(**bad)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        gauge([1.0, 2.0], Disk(2, (1.0,)))


def test_dict_round_trip():
    B = Disk("inf", (1.0, 3.0), 2.5)
    d = B.to_dict()
    assert d["p"] == "inf"
    assert Disk.from_dict(d) == B


@pytest.mark.parametrize("p", [1, 2, "inf"])
def test_bisection_oracle_agrees(p):
    B = Disk(p, (1.0, 0.5, 2.0), 1.5)
    rng = np.random.default_rng(7)
    for x in rng.standard_normal((50, 3)) * 3:
        assert abs(gauge(x, B) - bisection_gauge(x, B)) <= 1e-8


vec = st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3).map(np.array)
disks = st.builds(
    Disk,
    st.sampled_from([1, 2, "inf"]),
    st.lists(st.floats(0.1, 10), min_size=3, max_size=3).map(tuple),
    st.floats(0.1, 10),
)


@settings(max_examples=200, deadline=None)
@given(disks, vec, vec, st.floats(-100, 100))
def test_norm_axioms(B, x, y, a):
    gx, gy = gauge(x, B), gauge(y, B)
    assert gauge(x + y, B) <= gx + gy + 1e-12 * (1 + gx + gy)
    assert math.isclose(gauge(a * x, B), abs(a) * gx, rel_tol=1e-12, abs_tol=1e-12)


@settings(max_examples=200, deadline=None)
@given(disks, vec)
def test_membership_duality(B, x):
    g = gauge(x, B)
    assert contains(scale_disk(B, g * (1 + 1e-12) + 1e-300), x)
    if g > 1e-6:
        assert not contains(scale_disk(B, g * (1 - 1e-9)), x)


def test_contains_tolerance():
    B = Disk(2, (1.0,))
    assert not contains(B, [1.0 + 1e-9])
    assert contains(B, [1.0 + 1e-9], tol=1e-8)


def test_sample_boundary_on_sphere_and_prefix_stable():
    B = Disk(1, (1.0, 2.0))
    a = sample_boundary(B, 100, seed=3)
    b = sample_boundary(B, 200, seed=3)
    assert np.allclose(gauge(a, B), 1.0)
    assert np.array_equal(a, b[: len(a)])
    assert len(a) == 100 + n_extreme_points(2)


def test_extreme_point_counts():
    assert n_extreme_points(1) == 4
    assert n_extreme_points(2) == 8
    assert n_extreme_points(11) == 22


def test_sample_disk_inside_and_seeded():
    B = Disk(2, (1.0, 1.0, 3.0), 2.0)
    c = np.array([1.0, -1.0, 0.5])
    pts = sample_disk(B, 500, 11, center=c, scale=0.5)
    assert np.all(gauge(pts - c, B) <= 0.5 * (1 + 1e-12))
    assert np.array_equal(pts, sample_disk(B, 500, 11, center=c, scale=0.5))
    assert not np.array_equal(pts, sample_disk(B, 500, 12, center=c, scale=0.5))
    # interior points exist as well as boundary ones
    assert np.min(gauge(pts - c, B)) < 0.4


def test_sample_pairs_local_partners():
    B = Disk("inf", (1.0, 1.0))
    a, b = sample_pairs(B, 300, 4)
    d = gauge(a - b, B)
    assert np.all(d[1::2] < 1e-5)
    assert np.all(gauge(b, B) <= 1 + 1e-12)


def test_inclusion_margin_and_ratios():
    sq = Disk("inf", (1.0, 1.0))
    l2 = Disk(2, (1.0, 1.0))
    l1 = Disk(1, (1.0, 1.0))
    # l1 ball inside l2 ball inside square
    assert disk_inclusion_margin(l1, l2) <= 1.0
    assert disk_inclusion_margin(l2, sq) <= 1.0
    assert disk_inclusion_margin(sq, l2) == pytest.approx(math.sqrt(2))
    lo, hi = norm_ratio_bounds(l1, l2)
    assert lo == pytest.approx(1.0) and hi == pytest.approx(math.sqrt(2))


@settings(max_examples=100, deadline=None)
@given(disks, vec, st.floats(1.0, 5.0))
def test_inclusion_monotonicity(B, x, a):
    D = scale_disk(B, a)
    assert gauge(x, D) <= gauge(x, B) * (1 + 1e-12)


def test_strict_mackey_classical_constants():
    rep = check_strict_mackey(Disk("inf", (1, 1)), Disk("inf", (1, 1)), Disk(2, (1, 1)), 2000, 0)
    assert abs(rep.lower_const - 1 / math.sqrt(2)) <= 1e-3
    assert abs(rep.upper_const - 1.0) <= 1e-3
    assert rep.max_violation == 0.0


def test_strict_mackey_needs_inclusion():
    with pytest.raises(PreconditionError):
        check_strict_mackey(Disk(2, (1, 1), 2.0), Disk(2, (1, 1)), Disk(2, (1, 1)))
