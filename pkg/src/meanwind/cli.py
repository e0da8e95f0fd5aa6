"""Command-line front end.

    meanwind analyze 'preset:whirl(k=2,alpha=0.5)' --out runs/whirl
    meanwind gallery --out runs/gallery
    meanwind factor --weight 'exp(cos(x))' --N 32
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import RunConfig, load_config
from .exceptions import MeanWindError
from .finsec import phi_n_probe
from .gallery import run_gallery
from .hardy import circle_grid, spectral_factor_circle
from .pipeline import csv_text, dumps, run_analyze
from .symbolkit import cayley_pullback, load_symbol, parse_symbol
from .symbolkit.grammar import evaluate

MODULES = ("winding", "bmo", "finsec")


def _base_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    updates = {}
    symbol = getattr(args, "symbol", None)
    if getattr(args, "preset", None):
        symbol = "preset:" + args.preset
    if symbol:
        updates["symbol"] = symbol
    if getattr(args, "out", None):
        updates["out"] = args.out
    w = {}
    if getattr(args, "T_max", None) is not None:
        w["T_max"] = args.T_max
    if getattr(args, "alphas", None):
        w["alphas"] = [float(a) for a in args.alphas.split(",")]
    if w:
        updates["winding"] = w
    f = {}
    for key in ("K", "N"):
        if getattr(args, key, None) is not None:
            f[key] = getattr(args, key)
    if getattr(args, "n_list", None):
        f["n_list"] = [int(n) for n in args.n_list.split(",")]
    if f:
        updates["finsec"] = f
    if getattr(args, "write_trace", False):
        updates["write_trace"] = True
    return cfg.with_updates(**updates) if updates else cfg


def _print_verdicts(summary: dict, out=None) -> None:
    out = out or sys.stdout
    sym = summary.get("symbol", {})
    if sym:
        print(f"symbol {sym['text']}  (r={sym['r']}, digest {sym['digest']})", file=out)
    for v in summary.get("verdicts", []):
        extra = {k: v[k] for k in ("value", "index", "growth_slope", "detail", "reason") if k in v and v[k] is not None}
        tail = "  " + json.dumps(extra) if extra else ""
        print(f"  {v['verdict']:<15} {v['check']}{tail}", file=out)
    for e in summary.get("errors", []):
        print(f"  ERROR [{e['module']}] {e['error']}: {e['message']}", file=out)


def cmd_analyze(args, modules=MODULES) -> int:
    cfg = _base_config(args)
    if args.command in MODULES:
        cfg = cfg.with_updates(**{m: {"enabled": m == args.command} for m in MODULES})
    bundle = run_analyze(cfg, modules)
    if args.json:
        sys.stdout.write(dumps(bundle.summary))
    else:
        _print_verdicts(bundle.summary)
        if cfg.out:
            print(f"bundle written to {cfg.out}")
    return bundle.exit_code


def cmd_gallery(args) -> int:
    base = load_config(args.config) if args.config else RunConfig()
    res = run_gallery(args.out, base)
    for row in res.rows:
        if row[5] != "pass" or args.verbose:
            print("  ".join(row))
    print(f"gallery: {len(res.bundles)} entries, {len(res.rows)} checks, {len(res.failures)} failures, "
          f"{res.seconds:.1f} s")
    return res.exit_code


def cmd_factor(args) -> int:
    N = args.N
    t = circle_grid(2 * N)
    if args.weight:
        expr = parse_symbol(args.weight).entries[0][0]
        w = np.asarray(evaluate(expr, t), dtype=complex)
        if np.max(np.abs(w.imag)) > 1e-12 * max(1.0, np.max(np.abs(w))):
            raise MeanWindError("weight expression must be real on the circle")
        w = w.real
        source = {"weight": args.weight, "variable": "x is the circle angle t"}
    else:
        sym = load_symbol("preset:" + args.preset if args.preset else args.symbol)
        if sym.r != 1:
            raise MeanWindError("factor handles scalar symbols (weight |G|^2)")
        w = np.abs(cayley_pullback(sym, t - np.pi)[:, 0, 0]) ** 2
        source = {"symbol": sym.to_text(), "weight": "|G|^2 on the circle"}
    sf = spectral_factor_circle(w, N)
    report = {**source, "N": N, "residual": sf.residual, "log_tail": sf.tail,
              "coeffs_head": [[float(c.real), float(c.imag)] for c in sf.coeffs[:8]]}
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "factor.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text(["k", "re", "im"], [(k, c.real, c.imag) for k, c in enumerate(sf.coeffs)]))
        with open(os.path.join(args.out, "factor.json"), "w", encoding="utf-8") as fh:
            fh.write(dumps(report))
    sys.stdout.write(dumps(report))
    return 0


def cmd_probe(args) -> int:
    sym = load_symbol("preset:" + args.preset if args.preset else args.symbol)
    n_list = [int(n) for n in args.n_list.split(",")]
    K = args.K or max(2 * max(n_list) - 1, 8)
    probe = phi_n_probe(sym, args.N, K, n_list, args.margin)
    report = {"symbol": sym.to_text(), "N": args.N, "K": K, "n_list": n_list, "distances": list(probe.distances),
              "verdicts": list(probe.verdicts), "success_n": probe.success_n, "certificate": probe.certificate,
              "residual": probe.residual}
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "probe.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text(["shift", "distance", "verdict"],
                              [(n, d, v) for n, (d, v) in enumerate(zip(probe.distances, probe.verdicts))]))
        with open(os.path.join(args.out, "probe.json"), "w", encoding="utf-8") as fh:
            fh.write(dumps(report))
    sys.stdout.write(dumps(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meanwind", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = p.add_subparsers(dest="command", required=True)

    def symbol_args(sp, positional=True):
        if positional:
            sp.add_argument("symbol", nargs="?", help="inline DSL, preset:NAME(...), file:PATH or @PATH")
        sp.add_argument("--preset", help="preset such as 'whirl(k=2,alpha=0.5)'")
        sp.add_argument("--out", help="output directory for the report bundle")

    for name, help_ in [("analyze", "full pipeline"), ("winding", "mean winding numbers only"),
                        ("bmo", "oscillation diagnostics only"), ("finsec", "finite-section oracle only")]:
        sp = sub.add_parser(name, help=help_)
        symbol_args(sp)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--T-max", dest="T_max", type=float)
        sp.add_argument("--alphas", help="comma-separated alpha list")
        sp.add_argument("--K", type=int)
        sp.add_argument("--N", type=int)
        sp.add_argument("--n-list", dest="n_list")
        sp.add_argument("--write-trace", action="store_true", help="also write the full argument trace")
        sp.add_argument("--json", action="store_true", help="print the summary JSON instead of the verdict table")
        sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("gallery", help="regression gallery against stored expectations")
    sp.add_argument("--out")
    sp.add_argument("--config", help="JSON base configuration")
    sp.add_argument("--preset", help=argparse.SUPPRESS)
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_gallery)

    sp = sub.add_parser("factor", help="outer spectral factor of a weight on the circle")
    symbol_args(sp)
    sp.add_argument("--weight", help="positive weight as a DSL expression in the circle angle x")
    sp.add_argument("--N", type=int, default=64)
    sp.set_defaults(func=cmd_factor)

    sp = sub.add_parser("probe", help="phi^n left-invertibility probe via Nehari distances")
    symbol_args(sp)
    sp.add_argument("--N", type=int, default=3)
    sp.add_argument("--K", type=int)
    sp.add_argument("--n-list", dest="n_list", default="8,16,32")
    sp.add_argument("--margin", type=float, default=0.02)
    sp.set_defaults(func=cmd_probe)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("factor", "probe") and not (args.symbol or args.preset or getattr(args, "weight", None)):
        parser.error(f"{args.command} needs a symbol, --preset or --weight")
    try:
        return args.func(args)
    except MeanWindError as exc:
        print(f"error [{getattr(exc, 'module', 'meanwind')}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
