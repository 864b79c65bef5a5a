"""A small language for sequences of fuzzy numbers.

A definition gives the alpha-cut endpoints of the n-th term as formulas in
``n`` and ``alpha``::

    seq lower = (-1)^n * n + (alpha/2)^n;
        upper = (-1)^n * n + 2 - (alpha/2)^n;
        at 0: lower = 1, upper = 1;

Precedence, tightest first: ``^``, unary minus, ``* /``, ``+ -``.  All binary
operators associate to the left; ``-2^2`` is ``-(2^2)``.  Available functions
are ``pow``, ``factorial``, ``abs``, ``min`` and ``max``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import _hp
from .fuzzy_core import FuzzyError, FuzzyNumber, InvalidInputError, alpha_grid, check_shape, from_alpha_cuts

MAX_DEPTH = 100
FLOAT_FACTORIAL_MAX = 170
EXACT_FACTORIAL_MAX = 20000

FUNCTIONS = {"pow": (2, 2), "factorial": (1, 1), "abs": (1, 1), "min": (2, None), "max": (2, None)}
VARIABLES = ("n", "alpha")


class ParseError(FuzzyError):
    def __init__(self, position: int, message: str):
        super().__init__(f"position {position}: {message}")
        self.position = position
        self.message = message


class EvaluationError(FuzzyError):
    """Domain error while evaluating an endpoint formula."""

    def __init__(self, message: str, n: int, alpha: float | None = None):
        where = f"n={n}" if alpha is None else f"n={n}, alpha={alpha:g}"
        super().__init__(f"{message} at {where}")
        self.n = n
        self.alpha = alpha


# -- syntax tree ------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: Expr


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class Override:
    index: int
    lower: Expr
    upper: Expr


@dataclass(frozen=True)
class SeqDef:
    lower: Expr
    upper: Expr
    start: int = 0
    overrides: tuple[Override, ...] = field(default=())

    def override_for(self, n: int) -> Override | None:
        for o in self.overrides:
            if o.index == n:
                return o
        return None


# -- lexer ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),;:=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(source):
        ch = source[pos]
        if ord(ch) > 127:
            raise ParseError(pos, f"non-ASCII character {ch!r}")
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(pos, f"unexpected character {ch!r}")
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(source)))
    return toks


# -- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, source: str):
        self.toks = _tokenize(source)
        self.i = 0
        self.depth = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(tok.pos, f"{message}, found {found}")

    def expect(self, text: str) -> _Tok:
        tok = self.tok
        if tok.text != text or tok.kind == "num":
            raise self.error(f"expected {text!r}")
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind != "num":
            self.i += 1
            return True
        return False

    def integer(self) -> int:
        tok = self.tok
        if tok.kind != "num" or not tok.text.isdigit():
            raise self.error("expected a nonnegative integer index")
        if len(tok.text) > 18:
            raise ParseError(tok.pos, "index too large")
        self.i += 1
        return int(tok.text)

    def program(self) -> SeqDef:
        self.expect("seq")
        self.expect("lower")
        self.expect("=")
        lower = self.expr()
        self.expect(";")
        self.expect("upper")
        self.expect("=")
        upper = self.expr()
        self.expect(";")
        overrides = []
        seen = set()
        while self.tok.text == "at":
            at = self.expect("at")
            k = self.integer()
            if k in seen:
                raise ParseError(at.pos, f"duplicate override for index {k}")
            seen.add(k)
            self.expect(":")
            self.expect("lower")
            self.expect("=")
            lo = self.expr()
            self.expect(",")
            self.expect("upper")
            self.expect("=")
            hi = self.expr()
            self.expect(";")
            overrides.append(Override(k, lo, hi))
        start = 0
        if self.accept("start"):
            self.expect("=")
            start = self.integer()
            self.expect(";")
        if self.tok.kind != "eof":
            raise self.error("expected end of definition")
        return SeqDef(lower, upper, start, tuple(overrides))

    def _enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError(self.tok.pos, f"expression nested deeper than {MAX_DEPTH}")

    def expr(self) -> Expr:
        self._enter()
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        self.depth -= 1
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.accept("-"):
            self._enter()
            node = Neg(self.unary())
            self.depth -= 1
            return node
        return self.power()

    def power(self) -> Expr:
        node = self.atom()
        while self.accept("^"):
            node = BinOp("^", node, self.exponent())
        return node

    def exponent(self) -> Expr:
        # permits 2^-1 without parentheses
        if self.accept("-"):
            self._enter()
            node = Neg(self.exponent())
            self.depth -= 1
            return node
        return self.atom()

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                raise ParseError(tok.pos, f"numeric literal {tok.text[:20]!r} overflows")
            self.i += 1
            return Num(value)
        if tok.kind == "ident":
            self.i += 1
            if tok.text in VARIABLES:
                return Var(tok.text)
            if tok.text in FUNCTIONS:
                return self.call(tok)
            raise ParseError(tok.pos, f"unknown identifier {tok.text!r}")
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        raise self.error("expected a number, variable, function call or '('")

    def call(self, name: _Tok) -> Expr:
        if self.tok.text != "(":
            raise self.error(f"function {name.text!r} must be called with arguments")
        self.i += 1
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        self.expect(")")
        lo, hi = FUNCTIONS[name.text]
        if len(args) < lo or (hi is not None and len(args) > hi):
            want = str(lo) if lo == hi else f"at least {lo}"
            raise ParseError(name.pos, f"{name.text} takes {want} argument(s), got {len(args)}")
        return Call(name.text, tuple(args))


def parse(source: str) -> SeqDef:
    """Parse a sequence definition; raises :class:`ParseError` on bad input."""
    if not isinstance(source, str):
        raise ParseError(0, "source must be text")
    return _Parser(source).program()


def parse_expr(source: str) -> Expr:
    p = _Parser(source)
    node = p.expr()
    if p.tok.kind != "eof":
        raise p.error("expected end of expression")
    return node


# -- printer ----------------------------------------------------------------


def format_expr(e: Expr) -> str:
    """Fully parenthesised source text; reparses to the same tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{format_expr(e.operand)})"
    if isinstance(e, BinOp):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"
    raise TypeError(f"not an expression node: {e!r}")


def format_seqdef(d: SeqDef) -> str:
    parts = [f"seq lower = {format_expr(d.lower)}; upper = {format_expr(d.upper)};"]
    for o in d.overrides:
        parts.append(f"at {o.index}: lower = {format_expr(o.lower)}, upper = {format_expr(o.upper)};")
    if d.start:
        parts.append(f"start = {d.start};")
    return " ".join(parts)


# -- evaluation -------------------------------------------------------------


class _FloatOps:
    """Vectorised float64 evaluation; overflow yields inf and is caught later."""

    def const(self, v):
        return np.float64(v)

    def index(self, n):
        return np.asarray(n, dtype=float)[:, None]

    def alphas(self, M):
        return alpha_grid(M)

    def is_zero(self, a):
        return np.asarray(a == 0)

    def is_integer(self, a):
        return np.asarray(np.floor(a) == a)

    def negative(self, a):
        return np.asarray(a < 0)

    def pow(self, a, b):
        return np.power(a, b)

    def factorial(self, k: int):
        if k <= FLOAT_FACTORIAL_MAX:
            return float(math.factorial(k))
        return math.inf


class _HpOps:
    """Elementwise evaluation in gmpy2's current working precision."""

    def const(self, v):
        return mpfr(v)

    def index(self, n):
        return mpfr(n)

    def alphas(self, M):
        return _hp.array([mpfr(j) / M for j in range(M + 1)])

    def _map(self, f, a):
        if isinstance(a, np.ndarray):
            return np.array([f(x) for x in a.ravel()], dtype=bool).reshape(a.shape)
        return np.asarray(f(a))

    def is_zero(self, a):
        return self._map(lambda x: x == 0, a)

    def is_integer(self, a):
        return self._map(gmpy2.is_integer, a)

    def negative(self, a):
        return self._map(lambda x: x < 0, a)

    def pow(self, a, b):
        return a**b

    def factorial(self, k: int):
        if k <= EXACT_FACTORIAL_MAX:
            return gmpy2.fac(k)
        return gmpy2.exp(gmpy2.lgamma(mpfr(k + 1))[0])


FLOAT = _FloatOps()
HP = _HpOps()


class _Evaluator:
    def __init__(self, ops, n, alphas):
        self.ops = ops
        self.n = n
        self.alphas = alphas
        self.env = {"n": ops.index(n), "alpha": alphas}

    def fail(self, message: str, mask=None):
        n, alpha = self.n, None
        mask = None if mask is None else np.asarray(mask)
        if mask is not None and mask.ndim:
            where = np.unravel_index(int(np.argmax(mask)), mask.shape)
            if mask.ndim == 2:
                if mask.shape[0] > 1:
                    n = self.n[where[0]]
                if mask.shape[1] > 1:
                    alpha = float(self.alphas[where[1]])
            elif mask.shape[0] == len(self.alphas):
                alpha = float(self.alphas[where[0]])
        if isinstance(n, np.ndarray):
            n = n[0]
        raise EvaluationError(message, int(n), alpha)

    def __call__(self, e: Expr):
        ops = self.ops
        if isinstance(e, Num):
            return ops.const(e.value)
        if isinstance(e, Var):
            return self.env[e.name]
        if isinstance(e, Neg):
            return -self(e.operand)
        if isinstance(e, BinOp):
            a, b = self(e.left), self(e.right)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                zero = ops.is_zero(b)
                if zero.any():
                    self.fail("division by zero", zero)
                return a / b
            return self.power(a, b)
        if isinstance(e, Call):
            args = [self(x) for x in e.args]
            if e.name == "pow":
                return self.power(*args)
            if e.name == "abs":
                return abs(args[0])
            if e.name == "factorial":
                return self.factorial(args[0])
            fold = np.minimum if e.name == "min" else np.maximum
            out = args[0]
            for x in args[1:]:
                out = fold(out, x)
            return out
        raise TypeError(f"not an expression node: {e!r}")

    def power(self, a, b):
        ops = self.ops
        bad = ops.negative(a) & ~ops.is_integer(b)
        if bad.any():
            self.fail("negative base with non-integer exponent", bad)
        bad = ops.is_zero(a) & ops.negative(b)
        if bad.any():
            self.fail("zero raised to a negative power", bad)
        return ops.pow(a, b)

    def factorial(self, a):
        ops = self.ops
        bad = ops.negative(a) | ~ops.is_integer(a)
        if bad.any():
            self.fail("factorial of a negative or non-integer value", bad)
        if isinstance(a, np.ndarray):
            out = np.empty(a.shape, dtype=object if ops is HP else float)
            for idx, x in np.ndenumerate(a):
                out[idx] = ops.factorial(int(x))
            return out
        return ops.factorial(int(a))


def _check_index(d: SeqDef, n) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
        raise InvalidInputError(f"index must be a nonnegative integer, got {n!r}")
    if n < d.start:
        raise InvalidInputError(f"index {n} precedes the first term (start = {d.start})")
    return int(n)


def eval_block(d: SeqDef, n0: int, n1: int, M: int):
    """Raw float endpoint rows for ``n = n0..n1-1`` (not validated).

    Overflow shows up as non-finite entries; domain errors raise
    :class:`EvaluationError` naming the first offending ``n`` and ``alpha``.
    """
    n0 = _check_index(d, n0)
    ns = np.arange(n0, max(n1, n0), dtype=np.int64)
    size = M + 1
    lo = np.empty((len(ns), size))
    hi = np.empty((len(ns), size))
    special = np.array([d.override_for(int(n)) is not None for n in ns], dtype=bool)
    plain = ns[~special]
    alphas = FLOAT.alphas(M)
    with np.errstate(all="ignore"):
        if len(plain):
            ev = _Evaluator(FLOAT, plain, alphas)
            lo[~special] = np.broadcast_to(ev(d.lower), (len(plain), size))
            hi[~special] = np.broadcast_to(ev(d.upper), (len(plain), size))
        for i in np.flatnonzero(special):
            o = d.override_for(int(ns[i]))
            ev = _Evaluator(FLOAT, ns[i : i + 1], alphas)
            lo[i] = np.broadcast_to(ev(o.lower), (1, size))[0]
            hi[i] = np.broadcast_to(ev(o.upper), (1, size))[0]
    return lo, hi


def _endpoints_hp(d: SeqDef, n: int, M: int):
    n = _check_index(d, n)
    o = d.override_for(n)
    lower, upper = (o.lower, o.upper) if o else (d.lower, d.upper)
    ev = _Evaluator(HP, n, HP.alphas(M))
    lo, hi = ev(lower), ev(upper)
    lo = lo if isinstance(lo, np.ndarray) else _hp.full(M + 1, lo)
    hi = hi if isinstance(hi, np.ndarray) else _hp.full(M + 1, hi)
    return lo, hi


def eval_term(d: SeqDef, n: int, M: int) -> FuzzyNumber:
    """The n-th term on an (M+1)-level alpha grid, validated."""
    n = _check_index(d, n)
    lo, hi = eval_block(d, n, n + 1, M)
    return from_alpha_cuts(lo[0], hi[0])


def eval_term_hp(d: SeqDef, n: int, M: int):
    """Endpoint arrays of ``mpfr`` values at the current gmpy2 precision."""
    lo, hi = _endpoints_hp(d, n, M)
    check_shape(lo, hi)
    return lo, hi
