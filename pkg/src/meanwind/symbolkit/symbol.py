"""Matrix symbols on R and their evaluation.

Cayley convention (fixed everywhere): the circle point ``zeta = -exp(i*theta)``
with ``theta`` in ``(-pi, pi)`` corresponds to ``x = tan(theta/2)``.  With
this choice ``x = i(1+zeta)/(1-zeta)``, ``phi(x) = (x-i)/(x+i) = zeta`` and
``zeta = 1`` (``theta = +-pi``) is the image of ``x = +-inf``.  Finite-section
code samples ``t = theta + pi`` in ``(0, 2pi)`` so that ``zeta = exp(i t)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import SymbolDomainError
from . import grammar
from .grammar import Expr, Parser, close_tree, evaluate, to_text, validation_grid

CAYLEY_CONVENTION = "zeta = -exp(i*theta) = exp(i*t), x = tan(theta/2) = -cot(t/2); zeta=1 <-> x=+-inf; phi(x) = zeta"

CLASS_TAGS = ("whirl", "almost-periodic", "SAP", "rational", "limit", "custom")


@dataclass(frozen=True)
class SymbolSpec:
    """Parsed ``r x r`` symbol.  Immutable and safe to share."""

    entries: tuple[tuple[Expr, ...], ...]
    tag: str = field(default="custom", compare=False)
    params: tuple = field(default=(), compare=False)

    @property
    def r(self) -> int:
        return len(self.entries)

    def to_text(self) -> str:
        if self.r == 1:
            return to_text(self.entries[0][0])
        rows = ", ".join("[" + ", ".join(to_text(e) for e in row) + "]" for row in self.entries)
        return f"[{rows}]"

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def __call__(self, x):
        return eval_symbol(self, x)


def parse_symbol(text: str, tag: str = "custom", params: tuple = ()) -> SymbolSpec:
    """Parse DSL text into a :class:`SymbolSpec`.

    Raises ``SymbolSyntaxError`` (with line/column) for malformed input and
    ``SymbolDomainError`` when a closure check fails on the validation grid.
    """
    if tag not in CLASS_TAGS:
        raise SymbolDomainError(f"unknown class tag {tag!r}")
    rows = Parser(text).parse_symbol_entries()
    xs = validation_grid()
    entries = tuple(tuple(close_tree(e, xs) for e in row) for row in rows)
    return SymbolSpec(entries, tag, tuple(params))


def eval_symbol(sym: SymbolSpec, x) -> np.ndarray:
    """Entrywise evaluation.  Scalar ``x`` gives ``(r, r)``; array gives ``(n, r, r)``."""
    x = np.asarray(x, dtype=float)
    r = sym.r
    out = np.empty(x.shape + (r, r), dtype=complex)
    for j, row in enumerate(sym.entries):
        for k, e in enumerate(row):
            out[..., j, k] = evaluate(e, x)
    return out


def det_eval(sym: SymbolSpec, x):
    """Determinant of the symbol at ``x`` (LAPACK LU with partial pivoting; exact for r = 1)."""
    if sym.r == 1:
        v = evaluate(sym.entries[0][0], x)
        return v if v.ndim else complex(v)
    d = np.linalg.det(eval_symbol(sym, x))
    return d if np.ndim(d) else complex(d)


def cayley_pullback(sym: SymbolSpec, theta) -> np.ndarray:
    """Symbol value at the circle point ``-exp(i theta)``, i.e. at ``x = tan(theta/2)``."""
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(theta) >= np.pi):
        raise SymbolDomainError("theta must lie in the open interval (-pi, pi); theta=+-pi is x=+-inf")
    return eval_symbol(sym, np.tan(theta / 2))


def inverse_cayley(x) -> np.ndarray:
    """Angle ``theta`` in (-pi, pi) with ``tan(theta/2) = x``."""
    return 2 * np.arctan(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class MinModulus:
    value: float
    argmin: float
    grid_dependent: bool = True


def min_det_modulus(sym: SymbolSpec, grid) -> MinModulus:
    """Sampled lower-bound certificate ``min |det G|`` over the grid nodes."""
    nodes = np.asarray(getattr(grid, "nodes", grid), dtype=float)
    mod = np.abs(det_eval(sym, nodes))
    k = int(np.argmin(mod))
    return MinModulus(float(mod[k]), float(nodes[k]))


inner_eval = grammar.inner_eval
