"""Scalar expression trees for symbols on the real line.

The grammar is closed: every atom is total on R once the parse-time
closure checks pass (denominator floors, nonnegative bases for fractional
powers, ``log1p`` arguments off the cut).  See ``docs/grammar.md`` for
the EBNF.

Printing is fully parenthesised so that ``parse(to_text(tree)) == tree``
holds structurally.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..exceptions import SymbolSyntaxError, SymbolDomainError

# ---------------------------------------------------------------------------
# nodes


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class ImagUnit:
    pass


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - *
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    num: "Expr"
    den: "Expr"
    floor: float
    declared: bool = False


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: float


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Expr"


@dataclass(frozen=True)
class Blaschke:
    a: float
    zeros: tuple[complex, ...]


Expr = Union[Num, ImagUnit, Var, Neg, BinOp, Div, Pow, Call, Blaschke]

FUNCTIONS = ("exp", "sin", "cos", "tanh", "abs", "sign", "phi", "log1p", "sqrt")
CONSTANTS = {"pi": math.pi}

# ---------------------------------------------------------------------------
# evaluation


def inner_eval(a, C, zeros, z):
    """Inner function with a continuous extension to the real line.

    ``C * exp(i a z) * prod_j (|z_j^2 + 1| / (z_j^2 + 1)) (z - z_j) / (z - conj(z_j))``

    Parameters
    ----------
    a : float
        Exponential type, ``a >= 0``.
    C : complex
        Unimodular constant.
    zeros : sequence of complex
        Zeros in the open upper half-plane.
    z : complex or array_like
        Evaluation points with ``Im z >= 0``.
    """
    if a < 0:
        raise SymbolDomainError(f"inner function type a={a} must be >= 0")
    if not math.isclose(abs(C), 1.0, rel_tol=0, abs_tol=1e-12):
        raise SymbolDomainError(f"constant C={C} is not unimodular")
    z = np.asarray(z, dtype=complex)
    out = C * np.exp(1j * a * z)
    for zj in zeros:
        zj = complex(zj)
        if zj.imag <= 0:
            raise SymbolDomainError(f"inner zero {zj} must satisfy Im > 0")
        den = z - zj.conjugate()
        if np.any(den == 0):
            raise SymbolDomainError(f"evaluation point collides with pole {zj.conjugate()}")
        q = zj * zj + 1
        norm = abs(q) / q if q != 0 else 1.0  # z_j = i needs no convergence factor
        out = out * norm * (z - zj) / den
    return out


def evaluate(node: Expr, x):
    """Evaluate ``node`` at real ``x`` (scalar or ndarray), complex result."""
    x = np.asarray(x, dtype=float)
    return np.broadcast_to(_ev(node, x), x.shape).astype(complex)


def _ev(node, x):
    if isinstance(node, Num):
        return complex(node.value)
    if isinstance(node, ImagUnit):
        return 1j
    if isinstance(node, Var):
        return x.astype(complex)
    if isinstance(node, Neg):
        return -_ev(node.operand, x)
    if isinstance(node, BinOp):
        a, b = _ev(node.left, x), _ev(node.right, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        return a * b
    if isinstance(node, Div):
        return _ev(node.num, x) / _ev(node.den, x)
    if isinstance(node, Pow):
        base = _ev(node.base, x)
        p = node.exponent
        if float(p).is_integer():
            return np.power(base, int(p))
        # fractional powers are only admitted on nonnegative real bases
        return np.power(np.maximum(np.real(base), 0.0), p) + 0j
    if isinstance(node, Call):
        v = _ev(node.arg, x)
        name = node.name
        if name == "exp":
            return np.exp(v)
        if name == "sin":
            return np.sin(v)
        if name == "cos":
            return np.cos(v)
        if name == "tanh":
            return np.tanh(v)
        if name == "abs":
            return np.abs(v) + 0j
        if name == "sign":
            return np.sign(np.real(v)) + 0j
        if name == "phi":
            return (v - 1j) / (v + 1j)
        if name == "log1p":
            return np.log(1 + v)
        if name == "sqrt":
            return np.sqrt(np.maximum(np.real(v), 0.0)) + 0j
    if isinstance(node, Blaschke):
        return inner_eval(node.a, 1.0, node.zeros, x)
    raise TypeError(f"unknown node {node!r}")


def is_constant(node: Expr) -> bool:
    if isinstance(node, Var):
        return False
    if isinstance(node, Blaschke):
        return False
    for child in _children(node):
        if not is_constant(child):
            return False
    return True


def _children(node):
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Div):
        return (node.num, node.den)
    if isinstance(node, Pow):
        return (node.base,)
    if isinstance(node, Call):
        return (node.arg,)
    return ()


def walk(node: Expr):
    yield node
    for child in _children(node):
        yield from walk(child)


# ---------------------------------------------------------------------------
# printing


def _fmt(v: float) -> str:
    s = repr(float(v))
    return f"({s})" if s.startswith("-") else s


def _fmt_complex(z: complex) -> str:
    return f"({repr(z.real)} + {repr(z.imag)}*i)"


def to_text(node: Expr) -> str:
    if isinstance(node, Num):
        return _fmt(node.value)
    if isinstance(node, ImagUnit):
        return "i"
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Div):
        if node.declared:
            return f"div({to_text(node.num)}, {to_text(node.den)}, {repr(node.floor)})"
        return f"({to_text(node.num)} / {to_text(node.den)})"
    if isinstance(node, Pow):
        return f"({to_text(node.base)}^{_fmt(node.exponent)})"
    if isinstance(node, Call):
        return f"{node.name}({to_text(node.arg)})"
    if isinstance(node, Blaschke):
        zs = ", ".join(_fmt_complex(z) for z in node.zeros)
        return f"blaschke({repr(node.a)}, [{zs}])"
    raise TypeError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),\[\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SymbolSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        else:
            for k, ch in enumerate(m.group()):
                if ch == "\n":
                    line += 1
                    line_start = pos + k + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# parser


class Parser:
    """Recursive-descent parser producing expression trees.

    ``parse_symbol_entries`` returns a square grid of trees; a bare
    expression is a 1x1 grid.
    """

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        return SymbolSyntaxError(msg, tok.line, tok.col)

    def _accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def _expect(self, text: str):
        if not self._accept(text):
            shown = self.tok.text or "end of input"
            raise self._error(f"expected {text!r}, found {shown!r}")

    # grammar
    def parse_symbol_entries(self) -> list[list[Expr]]:
        if self.tok.kind == "op" and self.tok.text == "[":
            rows = self._matrix()
        else:
            rows = [[self.expr()]]
        if self.tok.kind != "eof":
            raise self._error(f"unexpected trailing input {self.tok.text!r}")
        r = len(rows)
        for row in rows:
            if len(row) != r:
                raise SymbolSyntaxError(
                    f"matrix is not square: {r} rows but a row has {len(row)} entries", 1, 1
                )
        return rows

    def _matrix(self):
        self._expect("[")
        rows = [self._row()]
        while self._accept(","):
            rows.append(self._row())
        self._expect("]")
        return rows

    def _row(self):
        self._expect("[")
        row = [self.expr()]
        while self._accept(","):
            row.append(self.expr())
        self._expect("]")
        return row

    def expr(self) -> Expr:
        node = self._term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.pos += 1
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Expr:
        node = self._unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.pos += 1
            rhs = self._unary()
            node = BinOp("*", node, rhs) if op == "*" else Div(node, rhs, 0.0)
        return node

    def _unary(self) -> Expr:
        if self._accept("-"):
            return Neg(self._unary())
        if self._accept("+"):
            return self._unary()
        return self._power()

    def _power(self) -> Expr:
        base = self._atom()
        if self._accept("^"):
            tok = self.tok
            if self._accept("("):
                e = self.expr()
                self._expect(")")
            else:
                sign = -1.0 if self._accept("-") else 1.0
                if self.tok.kind != "num":
                    raise self._error("exponent must be a number or a parenthesised constant")
                e = Num(sign * float(self.tok.text))
                self.pos += 1
            return Pow(base, self._real_constant(e, tok, "exponent"))
        return base

    def _real_constant(self, e: Expr, tok: Token, what: str) -> float:
        if not is_constant(e):
            raise self._error(f"{what} must be constant", tok)
        v = complex(evaluate(e, 0.0))
        if abs(v.imag) > 0 or not math.isfinite(v.real):
            raise self._error(f"{what} must be a finite real constant", tok)
        return float(v.real)

    def _complex_constant(self, e: Expr, tok: Token) -> complex:
        if not is_constant(e):
            raise self._error("blaschke zero must be constant", tok)
        return complex(evaluate(e, 0.0))

    def _atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.pos += 1
            return Num(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.pos += 1
            node = self.expr()
            self._expect(")")
            return node
        if tok.kind == "name":
            self.pos += 1
            name = tok.text
            if name == "x":
                return Var()
            if name == "i":
                return ImagUnit()
            if name in CONSTANTS:
                return Num(CONSTANTS[name])
            if name in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Call(name, arg)
            if name == "div":
                self._expect("(")
                num = self.expr()
                self._expect(",")
                den = self.expr()
                self._expect(",")
                ftok = self.tok
                floor = self._real_constant(self.expr(), ftok, "declared floor")
                self._expect(")")
                if floor <= 0:
                    raise self._error("declared denominator floor must be positive", ftok)
                return Div(num, den, floor, declared=True)
            if name == "blaschke":
                return self._blaschke(tok)
            raise self._error(f"unknown atom {name!r}", tok)
        shown = tok.text or "end of input"
        raise self._error(f"unexpected token {shown!r}", tok)

    def _blaschke(self, tok: Token) -> Blaschke:
        self._expect("(")
        atok = self.tok
        a = self._real_constant(self.expr(), atok, "blaschke type a")
        if a < 0:
            raise self._error("blaschke type a must be >= 0", atok)
        zeros = []
        if self._accept(","):
            self._expect("[")
            if not (self.tok.kind == "op" and self.tok.text == "]"):
                while True:
                    ztok = self.tok
                    z = self._complex_constant(self.expr(), ztok)
                    if z.imag <= 0:
                        raise self._error(f"blaschke zero {z} must have positive imaginary part", ztok)
                    zeros.append(z)
                    if not self._accept(","):
                        break
            self._expect("]")
        self._expect(")")
        return Blaschke(a, tuple(zeros))


# ---------------------------------------------------------------------------
# closure checks

VALIDATION_NODES = 10_000
MIN_FLOOR = 1e-10


def validation_grid(n: int = VALIDATION_NODES) -> np.ndarray:
    # odd count so that x = 0 is a node
    theta = np.linspace(-np.pi, np.pi, n + 1 + n % 2)[1:-1]
    return np.tan(theta / 2)


def close_tree(node: Expr, xs: np.ndarray) -> Expr:
    """Run the closure checks on ``xs`` and fill inferred division floors."""
    if isinstance(node, (Num, ImagUnit, Var, Blaschke)):
        return node
    if isinstance(node, Neg):
        return Neg(close_tree(node.operand, xs))
    if isinstance(node, BinOp):
        return BinOp(node.op, close_tree(node.left, xs), close_tree(node.right, xs))
    if isinstance(node, Div):
        num, den = close_tree(node.num, xs), close_tree(node.den, xs)
        sampled = float(np.min(np.abs(evaluate(den, xs))))
        if node.declared:
            if sampled < node.floor:
                raise SymbolDomainError(
                    f"denominator {to_text(den)} drops to {sampled:.3g} below declared floor {node.floor}"
                )
            return Div(num, den, node.floor, True)
        if sampled < MIN_FLOOR:
            raise SymbolDomainError(f"denominator {to_text(den)} vanishes on the real line")
        return Div(num, den, sampled, False)
    if isinstance(node, Pow):
        base = close_tree(node.base, xs)
        p = node.exponent
        vals = evaluate(base, xs)
        if not float(p).is_integer():
            if p <= 0:
                raise SymbolDomainError("fractional exponents must be positive")
            if np.any(np.abs(vals.imag) > 1e-12) or np.any(vals.real < 0):
                raise SymbolDomainError(
                    f"fractional power of {to_text(base)} needs a nonnegative real base; use abs(...)"
                )
        elif p < 0 and float(np.min(np.abs(vals))) < MIN_FLOOR:
            raise SymbolDomainError(f"negative power of {to_text(base)} which vanishes on the real line")
        return Pow(base, p)
    if isinstance(node, Call):
        arg = close_tree(node.arg, xs)
        vals = evaluate(arg, xs)
        if node.name == "phi" and float(np.min(np.abs(vals + 1j))) < MIN_FLOOR:
            raise SymbolDomainError("phi argument reaches the pole -i")
        if node.name == "log1p":
            w = 1 + vals
            if np.any((np.abs(w.imag) <= 1e-12) & (w.real <= 0)):
                raise SymbolDomainError("log1p argument crosses the branch cut")
        if node.name == "sqrt" and (np.any(np.abs(vals.imag) > 1e-12) or np.any(vals.real < 0)):
            raise SymbolDomainError("sqrt needs a nonnegative real argument")
        if node.name == "sign" and np.any(np.abs(vals.imag) > 1e-12):
            raise SymbolDomainError("sign needs a real argument")
        return Call(node.name, arg)
    raise TypeError(f"unknown node {node!r}")
