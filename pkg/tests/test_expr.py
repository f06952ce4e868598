import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volterra_ide.errors import EvaluationError
from volterra_ide.expr import (
    BinOp,
    ContextError,
    ExprEvalError,
    IndexRangeError,
    Neg,
    Num,
    ParseError,
    bind,
    canonical,
    compile_map,
    evaluate,
    parse,
)

ENV = {"t": 2.0, "s": 0.5, "v": 3.0, "w": -1.0,
       "x": np.array([1.0, -2.0]), "y": np.array([0.25, 4.0]), "u": np.array([-1.0, 9.0])}

# (source, value) pairs, values worked out by hand
CORPUS = [
    ("1 + 2 * 3", 7.0),
    ("(1 + 2) * 3", 9.0),
    ("2 ^ 3 ^ 2", 512.0),
    ("(2 ^ 3) ^ 2", 64.0),
    ("-2 ^ 2", -4.0),
    ("(-2) ^ 2", 4.0),
    ("2 ^ -1", 0.5),
    ("8 / 4 / 2", 1.0),
    ("10 - 4 - 3", 3.0),
    ("2 * -3", -6.0),
    ("--3", 3.0),
    ("1 - -1", 2.0),
    ("6 / 2 * 3", 9.0),
    ("2 * 3 ^ 2", 18.0),
    ("-x[1] ^ 2", -4.0),
    ("t * x[0] + y[1]", 6.0),
    ("abs(x[1]) + sqrt(y[0])", 2.5),
    ("exp(0) + sin(0) + cos(0) + tanh(0)", 2.0),
    ("1.5e1 - .5", 14.5),
    ("u[1] ^ 0.5 * s", 1.5),
    ("(v - w) / (t ^ 2)", 1.0),
    ("2 ^ 2 ^ -1", 2 ** 0.5),
]


def test_corpus_size():
    assert len(CORPUS) >= 20


@pytest.mark.parametrize("src,value", CORPUS)
def test_corpus_values(src, value):
    assert evaluate(parse(src), ENV) == value


@pytest.mark.parametrize("src,_", CORPUS)
def test_parse_print_parse(src, _):
    e = parse(src)
    text = canonical(e)
    assert parse(text) == e
    assert canonical(parse(text)) == text


def test_tree_shape():
    assert parse("-2^2") == Neg(BinOp("^", Num(2.0), Num(2.0)))
    assert parse("1-2-3") == BinOp("-", BinOp("-", Num(1.0), Num(2.0)), Num(3.0))


@pytest.mark.parametrize("src,offset", [
    ("x[0", 3),
    ("1 +", 3),
    ("(1 + 2", 6),
    ("1 + * 2", 4),
    ("2 $ 3", 2),
    ("foo(1)", 0),
    ("x[1.5]", 2),
    ("sin 1", 4),
    ("1 2", 2),
    ("", 0),
    ("x", 1),
])
def test_malformed_positions(src, offset):
    with pytest.raises(ParseError) as info:
        parse(src)
    assert info.value.offset == offset
    assert f"offset {offset}" in str(info.value)


def test_context_restriction():
    parse("t * u[0] + s", "kernel")
    with pytest.raises(ContextError) as info:
        parse("x[0] + s", "field")
    assert info.value.offset == 7
    with pytest.raises(ContextError):
        parse("x[0]", "kernel")
    with pytest.raises(ValueError):
        parse("1", "nowhere")


def test_index_range():
    bind(parse("x[1]"), 2)
    with pytest.raises(IndexRangeError):
        bind(parse("x[0] + y[2]"), 2)


def test_evaluation_guards():
    with pytest.raises(ExprEvalError):
        evaluate(parse("1 / (t - 2)"), ENV)
    with pytest.raises(EvaluationError):
        evaluate(parse("sqrt(w)"), ENV)
    assert math.isnan(evaluate(parse("w ^ 0.5"), ENV))


def test_vectorised_evaluation():
    t = np.linspace(0, 1, 5)
    out = evaluate(parse("t ^ 2 + 1"), {"t": t})
    assert np.allclose(out, t**2 + 1)


def test_compile_map_batches():
    H = compile_map(["x[1]", "-x[0] + y[0]"], "field", 2)
    t = np.zeros((3, 1))
    x = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    y = np.ones((3, 2))
    assert H(t, x, y).tolist() == [[2.0, 0.0], [4.0, -2.0], [6.0, -4.0]]
    # constants broadcast to the batch
    K = compile_map(["0", "1"], "kernel", 2)
    assert K(np.zeros((4, 1)), np.zeros((4, 1)), np.zeros((4, 2))).shape == (4, 2)
    with pytest.raises(ValueError):
        compile_map(["x[0]"], "field", 2)


def test_exp_field_example():
    H = compile_map(["exp(t) * x[0]"], "field", 1)
    assert H(np.array([0.0]), np.array([5.0]), np.array([0.0]))[0] == 5.0


leaf = st.one_of(
    st.floats(0, 1e6, allow_nan=False).map(lambda v: repr(v)),
    st.sampled_from(["t", "x[0]", "y[1]"]),
)


def _combine(children):
    ops = st.sampled_from(["+", "-", "*", "/", "^"])
    return st.one_of(
        st.tuples(children, ops, children).map(lambda a: f"{a[0]} {a[1]} {a[2]}"),
        children.map(lambda c: f"-{c}"),
        children.map(lambda c: f"({c})"),
        st.tuples(st.sampled_from(["sin", "exp", "abs"]), children).map(lambda a: f"{a[0]}({a[1]})"),
    )


@settings(max_examples=300, deadline=None)
@given(st.recursive(leaf, _combine, max_leaves=12))
def test_round_trip_property(src):
    e = parse(src, "field")
    assert parse(canonical(e), "field") == e
