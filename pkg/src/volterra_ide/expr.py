"""A small arithmetic language for declaring H, K, V, g and S in instance files.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = primary , [ "^" , unary ] ;            (* right associative *)
    primary = number
            | scalar                                 (* t s v w, per context *)
            | vector , "[" , integer , "]"           (* x y u, per context *)
            | func , "(" , expr , ")"
            | "(" , expr , ")" ;
    func    = "sin" | "cos" | "exp" | "tanh" | "sqrt" | "abs" ;

So ``^`` binds tighter than unary minus (``-2^2 == -4``), which binds tighter
than ``*`` and ``/``, which bind tighter than ``+`` and ``-``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

SCALARS = ("t", "s", "v", "w")
VECTORS = ("x", "y", "u")

CONTEXTS = {
    "kernel": {"t", "s", "u"},
    "field": {"t", "x", "y"},
    "lyapunov_V": {"t", "x", "y"},
    "lyapunov_g": {"t", "v", "w"},
    "lyapunov_S": {"t", "s", "v"},
}


class ParseError(ValueError):
    def __init__(self, offset: int, message: str, src: str = ""):
        super().__init__(f"at offset {offset}: {message}")
        self.offset = offset
        self.message = message
        self.src = src


class ContextError(ParseError):
    """An identifier that the expression's context does not admit."""


class IndexRangeError(ValueError):
    pass


class ExprEvalError(EvaluationError):
    pass


# -- syntax tree ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(default=0, compare=False)

    def __str__(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(default=0, compare=False)

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Index:
    name: str
    index: int
    pos: int = field(default=0, compare=False)

    def __str__(self):
        return f"{self.name}[{self.index}]"


@dataclass(frozen=True)
class Neg:
    operand: object
    pos: int = field(default=0, compare=False)

    def __str__(self):
        return f"(-{self.operand})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    pos: int = field(default=0, compare=False)

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call:
    func: str
    arg: object
    pos: int = field(default=0, compare=False)

    def __str__(self):
        return f"{self.func}({self.arg})"


# -- tokenizer / parser ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()\[\]]))"
)


def _tokenize(src):
    pos, out = 0, []
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            break
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(pos, f"unexpected character {src[pos]!r}", src)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src, allowed):
        self.src = src
        self.allowed = allowed
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, pos=None):
        return ParseError(self.tok[2] if pos is None else pos, msg, self.src)

    def expect(self, value):
        kind, text, pos = self.tok
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise self.error(f"expected {value!r}, found {found}")
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            raise self.error(f"unexpected {self.tok[1]!r}")
        return node

    def expr(self):
        left = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            _, op, pos = self.advance()
            left = BinOp(op, left, self.term(), pos)
        return left

    def term(self):
        left = self.unary()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            _, op, pos = self.advance()
            left = BinOp(op, left, self.unary(), pos)
        return left

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] == "-":
            _, _, pos = self.advance()
            return Neg(self.unary(), pos)
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok[0] == "op" and self.tok[1] == "^":
            _, op, pos = self.advance()
            return BinOp("^", base, self.unary(), pos)
        return base

    def primary(self):
        kind, text, pos = self.tok
        if kind == "num":
            self.advance()
            return Num(float(text), pos)
        if kind == "name":
            self.advance()
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg, pos)
            if text in VECTORS:
                self._admit(text, pos)
                self.expect("[")
                k, itext, ipos = self.tok
                if k != "num" or not itext.isdigit():
                    raise self.error("index must be a nonnegative integer literal")
                self.advance()
                self.expect("]")
                return Index(text, int(itext), pos)
            if text in SCALARS:
                self._admit(text, pos)
                return Var(text, pos)
            raise ParseError(pos, f"unknown identifier {text!r}", self.src)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise self.error(f"expected a number, identifier or '(', found {found}")

    def _admit(self, name, pos):
        if self.allowed is not None and name not in self.allowed:
            raise ContextError(pos, f"identifier {name!r} is not admitted here "
                                    f"(allowed: {', '.join(sorted(self.allowed))})", self.src)


def parse(src: str, context: str | None = None):
    """Parse ``src``; ``context`` (one of :data:`CONTEXTS`) restricts the identifiers."""
    if context is not None and context not in CONTEXTS:
        raise ValueError(f"unknown context {context!r}")
    return _Parser(src, CONTEXTS.get(context)).parse()


def canonical(e) -> str:
    """Fully parenthesised printing that re-parses to a structurally equal tree."""
    return str(e)


def _walk(e):
    yield e
    for child in (getattr(e, "operand", None), getattr(e, "left", None),
                  getattr(e, "right", None), getattr(e, "arg", None)):
        if child is not None:
            yield from _walk(child)


def bind(e, dim: int):
    """Check every vector index is below ``dim``; returns ``e``."""
    for node in _walk(e):
        if isinstance(node, Index) and node.index >= dim:
            raise IndexRangeError(f"{node} at offset {node.pos}: index out of range for dimension {dim}")
    return e


# -- evaluation ---------------------------------------------------------------------------


def _ev(e, b):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return b[e.name]
        except KeyError:
            raise ExprEvalError(f"no binding for {e.name!r}") from None
    if isinstance(e, Index):
        try:
            vec = b[e.name]
        except KeyError:
            raise ExprEvalError(f"no binding for {e.name!r}") from None
        return np.asarray(vec)[..., e.index]
    if isinstance(e, Neg):
        return -_ev(e.operand, b)
    if isinstance(e, Call):
        a = _ev(e.arg, b)
        if e.func == "sqrt" and np.any(np.asarray(a) < 0):
            raise ExprEvalError(f"sqrt of a negative value in {e}", {"expr": str(e)})
        return FUNCTIONS[e.func](a)
    l, r = _ev(e.left, b), _ev(e.right, b)
    if e.op == "+":
        return l + r
    if e.op == "-":
        return l - r
    if e.op == "*":
        return l * r
    if e.op == "/":
        if np.any(np.asarray(r) == 0):
            raise ExprEvalError(f"division by zero in {e}", {"expr": str(e)})
        return l / r
    with np.errstate(all="ignore"):
        return np.power(np.float64(l) if np.ndim(l) == 0 else l, r)


def evaluate(e, bindings: dict):
    """Evaluate with numpy semantics; scalars in, float out; arrays broadcast."""
    out = _ev(e, bindings)
    return float(out) if np.ndim(out) == 0 else np.asarray(out, dtype=float)


def _components(srcs):
    return [srcs] if isinstance(srcs, str) else list(srcs)


def compile_map(srcs, context: str, dim: int):
    """Build a batched map from ``dim`` component expressions (or one for a scalar map).

    The result follows the problem map convention: time-like arguments carry a trailing
    length-1 axis, vector arguments a trailing ``dim`` axis.  Names are bound positionally
    in the order ``t, s, v, w, x, y, u`` restricted to the context.
    """
    comps = [bind(parse(s, context), dim) for s in _components(srcs)]
    names = [n for n in ("t", "s", "v", "w", "x", "y", "u") if n in CONTEXTS[context]]
    vector_out = context in ("kernel", "field")
    if vector_out and len(comps) != dim:
        raise ValueError(f"{context} needs {dim} component expressions, got {len(comps)}")

    def fn(*args):
        if len(args) != len(names):
            raise TypeError(f"expected arguments {names}")
        b = {}
        for name, a in zip(names, args):
            a = np.asarray(a, dtype=float)
            b[name] = a[..., 0] if name in SCALARS and a.ndim and a.shape[-1] == 1 else a
        shape = np.broadcast_shapes(*(np.shape(b[n]) if n in SCALARS else np.shape(b[n])[:-1] for n in names))
        vals = [np.broadcast_to(np.asarray(_ev(c, b), dtype=float), shape) for c in comps]
        return np.stack(vals, axis=-1)

    fn.source = [canonical(c) for c in comps]
    return fn
