"""Shipped regression gallery with stored expected values.

Expectations address the summary by dotted path (``winding.w_alpha.1.upper``)
or a verdict by check name (``verdict:theorem1.bmo``).  Numeric expectations
carry an absolute tolerance; strings must match exactly.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

from .config import RunConfig
from .pipeline import Bundle, csv_text, dumps, run_analyze


@dataclass(frozen=True)
class GalleryEntry:
    name: str
    symbol: str
    expect: tuple  # (path, expected, tolerance)
    overrides: dict = field(default_factory=dict)


def _rational(m):
    return GalleryEntry(
        f"rational_{'m' if m < 0 else 'p'}{abs(m)}",
        f"preset:rational(m={m})",
        (("argtrack.winding_number.value", m, 0), ("finsec.index.value", -m, 0),
         ("finsec.index.cross_check", -m, 0), ("verdict:theorem1.bmo", "no-obstruction", None)),
    )


GALLERY = (
    GalleryEntry("identity", "preset:identity()", (
        ("winding.w_alpha.1.upper", 0.0, 1e-12), ("winding.w_alpha.1.lower", 0.0, 1e-12),
        ("winding.beta_lower_bound.value", 0.0, 1e-12), ("finsec.index.value", 0, 0),
        ("verdict:theorem2.phi_plus[eta_1]", "no-obstruction", None),
        ("verdict:theorem2.phi_minus[eta_1]", "no-obstruction", None),
        ("bmo.classification", "no obstruction found", None),
    )),
    *(_rational(m) for m in (1, -1, 2, -2, 3, -3)),
    GalleryEntry("limit_half", "preset:limit(jump=0.5)", (
        ("winding.mean.0.tilde_upper", 1.5707963267948966, 0.02), ("winding.mean.0.upper", 1.5707963267948966, 0.02),
        ("winding.mean.0.lower", 0.0, 0.02), ("verdict:limits.criterion", "no-obstruction", None),
        ("finsec.verdict", "inapplicable", None),
    )),
    GalleryEntry("limit_boundary", "preset:limit(jump=1)", (
        ("argtrack.winding_number.criterion_boundary", True, None),
        ("verdict:limits.criterion", "certificate", None),
    )),
    GalleryEntry("limit_full_turn", "preset:limit(jump=2)", (
        ("argtrack.winding_number.value", 1, 0), ("finsec.index.value", -1, 0),
        ("argtrack.winding_number.criterion_boundary", False, None),
    )),
    GalleryEntry("whirl_half", "preset:whirl(k=2,alpha=0.5)", (
        ("winding.w_alpha.0.5.upper", 2.0, 0.1), ("finsec.verdict", "inapplicable", None),
        ("verdict:theorem1.bmo", "certificate", None), ("verdict:theorem1.bmo_plus", "no-obstruction", None),
    )),
    GalleryEntry("whirl_linear", "preset:whirl(k=-3,alpha=1)", (
        ("winding.w_alpha.1.upper", -3.0, 1e-6), ("winding.w_alpha.1.lower", -3.0, 1e-6),
        ("verdict:theorem1.bmo_plus", "certificate", None),
    )),
    GalleryEntry("whirl_square", "preset:whirl(k=1,alpha=2)", (
        ("verdict:theorem2.phi_minus[eta_1]", "certificate", None),
        ("verdict:theorem2.phi_plus[eta_1]", "no-obstruction", None),
    ), {"winding": {"T_max": 100.0, "decades": 2}}),
    GalleryEntry("whirl_square_neg", "preset:whirl(k=-1,alpha=2)", (
        ("verdict:theorem2.phi_plus[eta_1]", "certificate", None),
        ("verdict:theorem2.phi_minus[eta_1]", "no-obstruction", None),
    ), {"winding": {"T_max": 100.0, "decades": 2}}),
    GalleryEntry("sap", "preset:sap(kminus=-1,kplus=2)", (
        ("winding.w_alpha.1.lower", -1.0, 0.02), ("winding.w_alpha.1.upper", 2.0, 0.04),
        ("winding.w_alpha.1.tilde_upper", 0.5, 0.01), ("winding.beta_lower_bound.value", 2.0, 0.04),
        ("argtrack.mean_motion.+.slope", 2.0, 0.01), ("argtrack.mean_motion.-.slope", -1.0, 0.01),
    )),
    GalleryEntry("sap_blend", "preset:sap(kminus=1,kplus=0.5)", (
        ("winding.w_alpha.1.lower", 0.5, 0.01), ("winding.w_alpha.1.upper", 1.0, 0.02),
        ("winding.w_alpha.1.tilde_upper", 0.75, 0.015),
    )),
    GalleryEntry("diag_rational", "preset:diag(rational(m=1); rational(m=2))", (
        ("argtrack.winding_number.value", 3, 0), ("finsec.index.value", -3, 0),
    )),
    GalleryEntry("diag_mixed", "preset:diag(rational(m=1); rational(m=-1))", (
        ("argtrack.winding_number.value", 0, 0), ("finsec.index.value", 0, 0),
    )),
    GalleryEntry("diag_whirl", "preset:diag(whirl(k=1,alpha=1); rational(m=-1))", (
        ("winding.w_alpha.1.upper", 1.0, 1e-3), ("winding.beta_lower_bound.value", 0.5, 5e-4),
        ("finsec.verdict", "inapplicable", None),
    )),
    GalleryEntry("mix2", "preset:mix2()", (
        ("winding.w_alpha.1.upper", -1.0, 0.02), ("winding.w_alpha.1.lower", -1.0, 0.02),
    )),
)


def lookup(summary: dict, path: str):
    if path.startswith("verdict:"):
        name = path[len("verdict:"):]
        for v in summary.get("verdicts", []):
            if v["check"] == name:
                return v["verdict"]
        raise KeyError(path)
    cur = summary
    parts = path.split(".")
    i = 0
    while i < len(parts):
        # keys such as "0.5" contain the separator
        for j in range(len(parts), i, -1):
            key = ".".join(parts[i:j])
            if isinstance(cur, dict) and key in cur:
                cur = cur[key]
                i = j
                break
            if isinstance(cur, list) and j == i + 1 and key.isdigit() and int(key) < len(cur):
                cur = cur[int(key)]
                i = j
                break
        else:
            raise KeyError(path)
    return cur


def check_expectation(summary: dict, path: str, expected, tol):
    try:
        actual = lookup(summary, path)
    except KeyError:
        return None, False
    if tol is None:
        return actual, actual == expected
    try:
        return actual, abs(float(actual) - float(expected)) <= tol
    except (TypeError, ValueError):
        return actual, False


@dataclass
class GalleryResult:
    rows: list
    bundles: dict
    seconds: float

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r[5] != "pass"]

    @property
    def exit_code(self) -> int:
        return 1 if self.failures or any(b.exit_code for b in self.bundles.values()) else 0


GALLERY_HEADER = ["entry", "check", "expected", "actual", "tolerance", "status"]


def run_gallery(out: str | None = None, base: RunConfig | None = None, entries=GALLERY) -> GalleryResult:
    """Run every gallery entry and compare against the stored expectations."""
    base = base or RunConfig()
    t0 = time.perf_counter()
    rows, bundles = [], {}
    for e in entries:
        cfg = base.with_updates(symbol=e.symbol, name=e.name, out=None, **e.overrides)
        b: Bundle = run_analyze(cfg)
        bundles[e.name] = b
        if out:
            b.write(os.path.join(out, e.name))
        for path, expected, tol in e.expect:
            actual, ok = check_expectation(b.summary, path, expected, tol)
            rows.append((e.name, path, repr(expected), repr(actual), "" if tol is None else repr(tol),
                         "pass" if ok else "FAIL"))
        if b.exit_code:
            rows.append((e.name, "exit_code", "0", repr(b.exit_code), "", "FAIL"))
    res = GalleryResult(rows, bundles, time.perf_counter() - t0)
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "gallery.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text(GALLERY_HEADER, rows))
        with open(os.path.join(out, "gallery_summary.json"), "w", encoding="utf-8") as fh:
            fh.write(dumps({"entries": len(entries), "checks": len(rows), "failures": len(res.failures),
                            "exit_code": res.exit_code}))
    return res
