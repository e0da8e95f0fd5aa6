"""Named gallery symbols, addressable as ``preset:whirl(k=2,alpha=0.5)``.

Each builder returns DSL text, so a preset is just a shorthand for a
string the user could have typed.
"""

from __future__ import annotations

import re

from ..exceptions import SymbolSyntaxError
from .symbol import SymbolSpec, parse_symbol


def _num(v: float) -> str:
    v = float(v)
    return repr(v) if v >= 0 else f"({repr(v)})"


def identity(r=1):
    r = int(r)
    if r == 1:
        return "1", "custom"
    rows = ", ".join("[" + ", ".join("1" if j == k else "0" for k in range(r)) + "]" for j in range(r))
    return f"[{rows}]", "custom"


def whirl(k=1.0, alpha=1.0):
    """``exp(i k sign(x) |x|^alpha)``."""
    return f"exp(i*{_num(k)}*sign(x)*abs(x)^{_num(alpha)})", "whirl"


def linear(kappa=1.0):
    return f"exp(i*{_num(kappa)}*x)", "almost-periodic"


def rational(m=1):
    """Winding ``m`` rational symbol ``phi(x)^m (x+2i)/(x+i)``."""
    m = int(m)
    return f"phi(x)^{_num(m)}*(x + 2*i)/(x + i)", "rational"


def limit(jump=0.5):
    """``exp(i*jump*pi*tanh(x)/2)``: finite limits, total argument jump ``jump*pi``."""
    return f"exp(i*{_num(jump)}*pi*tanh(x)/2)", "limit"


def sap(kminus=-1.0, kplus=2.0):
    """Scalar semi-almost-periodic symbol with mean motions ``kminus`` at -inf, ``kplus`` at +inf.

    Phase ``s(x)(kplus x + sin x) + (1 - s(x))(kminus x + cos(sqrt2 x))``
    with the smooth switch ``s = (1 + tanh x)/2``.
    """
    s = "(1 + tanh(x))/2"
    right = f"({_num(kplus)}*x + sin(x))"
    left = f"({_num(kminus)}*x + cos(sqrt(2)*x))"
    return f"exp(i*({s}*{right} + (1 - {s})*{left}))", "SAP"


def mix2():
    """Non-diagonal 2x2 symbol with |det| >= 7/8, used for determinant cross-checks."""
    return (
        "[[exp(i*x), 0.5*cos(x)], [0.25*sin(x), exp(-2*i*x)*(x + 2*i)/(x + i)]]",
        "custom",
    )


def blaschke_conj(a=0.5):
    """Real-line image of the conjugated disc Blaschke factor ``conj((zeta + a)/(1 + a zeta))``."""
    return f"1/((phi(x) + {_num(a)})/(1 + {_num(a)}*phi(x)))", "rational"


BUILDERS = {
    "identity": identity,
    "whirl": whirl,
    "linear": linear,
    "rational": rational,
    "limit": limit,
    "sap": sap,
    "mix2": mix2,
    "blaschke_conj": blaschke_conj,
}

_CALL_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z_0-9]*)\s*(?:\((.*)\))?\s*$", re.S)


def _split_top(s: str, sep: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def preset_text(spec: str) -> tuple[str, str, tuple]:
    """Resolve ``name(key=value, ...)`` to ``(dsl_text, tag, params)``.

    ``diag(P1; P2; ...)`` builds a block-diagonal symbol from scalar presets.
    """
    m = _CALL_RE.match(spec)
    if not m:
        raise SymbolSyntaxError(f"malformed preset {spec!r}", 1, 1)
    name, argstr = m.group(1), m.group(2) or ""
    if name == "diag":
        blocks = [preset_text(p) for p in _split_top(argstr, ";")]
        n = len(blocks)
        rows = []
        for j, (text, _, _) in enumerate(blocks):
            if text.lstrip().startswith("[["):
                raise SymbolSyntaxError("diag() takes scalar presets only", 1, 1)
            rows.append("[" + ", ".join(text if k == j else "0" for k in range(n)) + "]")
        return "[" + ", ".join(rows) + "]", "custom", (("diag", tuple(b[2] for b in blocks)),)
    if name not in BUILDERS:
        raise SymbolSyntaxError(f"unknown preset {name!r}; known: {', '.join(sorted(BUILDERS))}", 1, 1)
    kwargs = {}
    for item in _split_top(argstr, ","):
        if "=" not in item:
            raise SymbolSyntaxError(f"preset argument {item!r} must be key=value", 1, 1)
        key, val = (s.strip() for s in item.split("=", 1))
        try:
            kwargs[key] = float(val)
        except ValueError:
            raise SymbolSyntaxError(f"preset argument {key}={val!r} is not a number", 1, 1) from None
    try:
        text, tag = BUILDERS[name](**kwargs)
    except TypeError as exc:
        raise SymbolSyntaxError(f"bad arguments for preset {name}: {exc}", 1, 1) from None
    return text, tag, ((name, tuple(sorted(kwargs.items()))),)


def preset(spec: str) -> SymbolSpec:
    text, tag, params = preset_text(spec)
    return parse_symbol(text, tag=tag, params=params)


def load_symbol(source: str) -> SymbolSpec:
    """Resolve a CLI symbol source: ``preset:...``, ``file:PATH``, ``@PATH`` or inline DSL."""
    if source.startswith("preset:"):
        return preset(source[len("preset:"):])
    if source.startswith("file:") or source.startswith("@"):
        path = source.split(":", 1)[1] if source.startswith("file:") else source[1:]
        with open(path, encoding="utf-8") as fh:
            return parse_symbol(fh.read())
    return parse_symbol(source)
