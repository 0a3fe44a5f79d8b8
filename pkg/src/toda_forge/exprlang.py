"""A small expression language for generating functions of one variable ``t``.

Grammar (whitespace ignored)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' exponent)*
    exponent:= '-'? atom            (must fold to a constant)
    atom    := NUMBER | 't' | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := exp | log | sin | cos | sqrt

Repeated '^' groups to the left: 2^3^2 is (2^3)^2.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import jetcalc as jc
from .errors import DomainError, EvalError, ParseError, SingularityError, UnknownIdentifierError
from .jetcalc import TaylorJet

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")
VARIABLE = "t"


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Unary:
    op: str  # neg or one of FUNCTIONS
    arg: "FuncExpr"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * /
    left: "FuncExpr"
    right: "FuncExpr"


@dataclass(frozen=True)
class Pow:
    base: "FuncExpr"
    exponent: Const


FuncExpr = Union[Const, Var, Unary, Binary, Pow]


# --------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, ident, op, end
    text: str
    offset: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(src)))
    return toks


_ATOM_START = ("number", "t", "(", "-", *FUNCTIONS)


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind == "end":
            raise ParseError(f"unexpected {self._describe(self.tok)}", self.tok.offset, [text])
        return self.advance()

    @staticmethod
    def _describe(tok: _Tok) -> str:
        return "end of input" if tok.kind == "end" else f"token {tok.text!r}"

    def parse(self) -> FuncExpr:
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(
                f"unexpected {self._describe(self.tok)}",
                self.tok.offset,
                ["+", "-", "*", "/", "^", "end of input"],
            )
        return node

    def expr(self) -> FuncExpr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> FuncExpr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> FuncExpr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> FuncExpr:
        node = self.atom()
        while self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            start = self.tok.offset
            if self.tok.kind == "op" and self.tok.text == "-":
                self.advance()
                exp_node: FuncExpr = Unary("neg", self.atom())
            else:
                exp_node = self.atom()
            if _has_variable(exp_node):
                raise ParseError("exponent must be a constant", start, ["number", "("])
            node = Pow(node, Const(_fold(exp_node)))
        return node

    def atom(self) -> FuncExpr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "ident":
            if tok.text == VARIABLE:
                self.advance()
                return Var()
            if tok.text in FUNCTIONS:
                self.advance()
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(tok.text, arg)
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.offset, _ATOM_START)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected {self._describe(tok)}", tok.offset, _ATOM_START)


def _has_variable(node: FuncExpr) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Const):
        return False
    if isinstance(node, Unary):
        return _has_variable(node.arg)
    if isinstance(node, Binary):
        return _has_variable(node.left) or _has_variable(node.right)
    return _has_variable(node.base)


def _fold(node: FuncExpr) -> float:
    return float(eval_float(node, 0.0))


def parse_expr(src: str) -> FuncExpr:
    """Parse ``src`` into an immutable expression tree."""
    if not isinstance(src, str) or not src.strip():
        raise ParseError("empty expression", 0, _ATOM_START)
    return _Parser(src).parse()


# --------------------------------------------------------------------------
# pretty printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: FuncExpr) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary) and node.op == "neg":
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_source(node: FuncExpr) -> str:
    """Render a tree back to text that parses to the same tree."""
    if isinstance(node, Const):
        s = _fmt_number(node.value)
        return f"({s})" if node.value < 0 else s
    if isinstance(node, Var):
        return VARIABLE
    if isinstance(node, Unary):
        if node.op == "neg":
            inner = to_source(node.arg)
            return f"-({inner})" if _prec(node.arg) < 3 else f"-{inner}"
        return f"{node.op}({to_source(node.arg)})"
    if isinstance(node, Binary):
        p = _PREC[node.op]
        left = to_source(node.left)
        right = to_source(node.right)
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    base = to_source(node.base)
    if _prec(node.base) < 4:
        base = f"({base})"
    e = node.exponent.value
    es = _fmt_number(e)
    return f"{base}^({es})" if e < 0 else f"{base}^{es}"


# --------------------------------------------------------------------------
# evaluation

def eval_jet(f: FuncExpr, at: float, order: int) -> TaylorJet:
    """Exact jet of ``f`` at ``at`` by structural recursion."""
    if isinstance(f, str):
        f = parse_expr(f)
    return _jet(f, float(at), int(order))


def _jet(node: FuncExpr, at: float, order: int) -> TaylorJet:
    if isinstance(node, Const):
        return TaylorJet.constant(node.value, at, order)
    if isinstance(node, Var):
        return TaylorJet.variable(at, order)
    try:
        if isinstance(node, Unary):
            a = _jet(node.arg, at, order)
            if node.op == "neg":
                return -a
            if node.op == "exp":
                return jc.jet_exp(a)
            if node.op == "log":
                return jc.jet_log(a)
            if node.op == "sin":
                return jc.jet_sin(a)
            if node.op == "cos":
                return jc.jet_cos(a)
            return jc.jet_sqrt(a)
        if isinstance(node, Binary):
            a = _jet(node.left, at, order)
            b = _jet(node.right, at, order)
            return {"+": a.__add__, "-": a.__sub__, "*": a.__mul__, "/": a.__truediv__}[node.op](b)
        return jc.jet_pow_real(_jet(node.base, at, order), node.exponent.value)
    except EvalError:
        raise
    except (DomainError, SingularityError) as exc:
        raise EvalError(str(exc).split(" (at base point")[0], to_source(node), at) from exc


def eval_float(f: FuncExpr, t):
    """Evaluate at a scalar or a numpy array of points."""
    if isinstance(f, str):
        f = parse_expr(f)
    arr = np.asarray(t, dtype=float)
    out = _val(f, arr)
    if np.ndim(out) == 0:
        return float(out)
    return np.broadcast_to(out, arr.shape).astype(float)


def _bad(node, t, mask):
    at = t[mask].flat[0] if np.ndim(t) else float(t)
    return at


def _val(node: FuncExpr, t: np.ndarray):
    if isinstance(node, Const):
        return np.float64(node.value)
    if isinstance(node, Var):
        return t
    if isinstance(node, Unary):
        a = _val(node.arg, t)
        if node.op == "neg":
            return -a
        if node.op == "exp":
            with np.errstate(over="raise"):
                try:
                    return np.exp(a)
                except FloatingPointError:
                    raise EvalError("overflow", to_source(node)) from None
        if node.op == "log":
            bad = np.broadcast_to(a, np.shape(t)) <= 0
            if np.any(bad):
                raise EvalError("log of nonpositive value", to_source(node), _bad(node, t, bad))
            return np.log(a)
        if node.op == "sqrt":
            bad = np.broadcast_to(a, np.shape(t)) < 0
            if np.any(bad):
                raise EvalError("sqrt of negative value", to_source(node), _bad(node, t, bad))
            return np.sqrt(a)
        return np.sin(a) if node.op == "sin" else np.cos(a)
    if isinstance(node, Binary):
        a = _val(node.left, t)
        b = _val(node.right, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        bad = np.broadcast_to(b, np.shape(t)) == 0
        if np.any(bad):
            raise EvalError("division by zero", to_source(node), _bad(node, t, bad))
        return a / b
    a = _val(node.base, t)
    p = node.exponent.value
    if p.is_integer():
        if p < 0:
            bad = np.broadcast_to(a, np.shape(t)) == 0
            if np.any(bad):
                raise EvalError("negative power of zero", to_source(node), _bad(node, t, bad))
        return np.power(a, p)
    bad = np.broadcast_to(a, np.shape(t)) < 0
    if np.any(bad):
        raise EvalError("fractional power of negative value", to_source(node), _bad(node, t, bad))
    return np.power(a, p)


def as_expr(f) -> FuncExpr:
    """Accept a source string or an already parsed tree."""
    return parse_expr(f) if isinstance(f, str) else f


def is_constant(node: FuncExpr) -> bool:
    return not _has_variable(node)


def constant_value(node: FuncExpr) -> float:
    if _has_variable(node):
        raise ValueError("expression depends on t")
    return _fold(node)


__all__ = [
    "Binary",
    "Const",
    "FuncExpr",
    "Pow",
    "Unary",
    "Var",
    "as_expr",
    "eval_float",
    "eval_jet",
    "parse_expr",
    "to_source",
]
