"""Analysis pipeline: symbol -> trace -> {winding, bmo, finsec} -> report bundle.

Bundles are split into deterministic CSV bodies and JSON files; the only
run-dependent data (timestamps, versions) live in ``metadata.json``.
Every verdict uses the vocabulary ``certificate``, ``no-obstruction`` or
``inapplicable``; the diagnostics implement necessary conditions only and
never claim that an operator is Fredholm.
"""

from __future__ import annotations

import csv
import datetime
import io
import json
import os
import platform
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .argtrack import mean_motion, unwrap_arg, winding_number
from .bmo import dyadic_scales, theorem1_report
from .config import RunConfig, resolve_eta
from .exceptions import FinsecInapplicable, MeanWindError, NonConvergentTails, MeanMotionNotDetected
from .finsec import fourier_coeffs, index_estimate, phi_n_probe
from .symbolkit import CAYLEY_CONVENTION, SampleGrid, load_symbol, min_det_modulus
from .winding import (
    default_T_grid,
    generalized_winding,
    mean_winding,
    required_range,
    theorem2_check,
    w_alpha,
)

SCHEMA_VERSION = 1
CSV_SCHEMAS = {
    "winding.csv": ["eta_id", "T", "y", "pairing", "h1_norm", "ratio"],
    "generalized.csv": ["alpha", "eta_id", "T", "y", "value"],
    "walpha.csv": ["alpha", "T", "y", "value"],
    "bmo.csv": ["profile", "scale", "worst_location", "oscillation"],
    "finsec.csv": ["n", "sigma_min", "ker", "coker", "hankel_sigma"],
    "coeffs.csv": ["k", "row", "col", "re", "im"],
    "arg_series.csv": ["x", "arg"],
}
SERIES_POINTS = 2001
BOUNDARY_TOL = 1e-6


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return "" if v is None else str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


@dataclass
class Bundle:
    """In-memory report bundle; ``write`` serialises it into a directory."""

    config: RunConfig
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    enabled: list = field(default_factory=list)
    completed: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if not self.errors and set(self.enabled) <= set(self.completed) else 1

    def manifest(self) -> dict:
        files = ["config.json", "summary.json", "metadata.json"] + sorted(self.tables)
        return {
            "schema_version": SCHEMA_VERSION,
            "files": files,
            "enabled": self.enabled,
            "completed": self.completed,
            "missing": [m for m in self.enabled if m not in self.completed],
            "errors": self.errors,
            "complete": self.exit_code == 0,
        }

    def write(self, out_dir) -> None:
        os.makedirs(out_dir, exist_ok=True)
        files = {
            "config.json": self.config.to_json() + "\n",
            "summary.json": dumps(self.summary),
            "MANIFEST.json": dumps(self.manifest()),
            "metadata.json": dumps({
                "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                "meanwind_version": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "platform": platform.platform(),
            }),
        }
        if "csv" in self.config.formats:
            for name, (header, rows) in self.tables.items():
                files[name] = csv_text(header, rows)
        for name, text in files.items():
            with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)


def _y_rel(count: int) -> np.ndarray:
    return np.array([0.0]) if count == 1 else np.linspace(-1.0, 1.0, count)


def _fail(bundle: Bundle, module: str, exc: Exception, **params) -> None:
    bundle.errors.append({"module": getattr(exc, "module", module), "stage": module,
                          "error": type(exc).__name__, "message": str(exc), "parameters": _jsonable(params)})


def _verdict(check, verdict, source, claim, **detail):
    return {"check": check, "verdict": verdict, "source": source, "claim": claim, **_jsonable(detail)}


def _corollary1(est: dict) -> tuple[str, str]:
    """Sign certificates from a generalized estimate; sign must beat twice the drift."""
    tol = max(2 * est["drift"], 1e-6)
    plus = "certificate" if est["lower"] < -tol else "no-obstruction"
    minus = "certificate" if est["upper"] > tol else "no-obstruction"
    return plus, minus


def needed_half_width(cfg: RunConfig) -> float:
    w = cfg.winding
    T = default_T_grid(w.T_max, w.decades, w.per_decade)
    need = float(T[-1]) * 2  # window difference needs [y - T, y + T] with |y| <= T
    for e in w.etas:
        lo, hi = required_range(resolve_eta(e), T, _y_rel(w.y_count))
        need = max(need, -lo, hi)
    return need * (1 + 1e-9) + 1.0


def run_analyze(cfg: RunConfig, modules: tuple = ("winding", "bmo", "finsec")) -> Bundle:
    """Run the configured pipeline and return the bundle (written when ``cfg.out`` is set)."""
    b = Bundle(cfg)
    enabled = [m for m in modules if getattr(cfg, m).enabled]
    b.enabled = ["symbolkit"] + (["argtrack"] if {"winding", "bmo"} & set(enabled) else []) + enabled
    verdicts = []
    s = b.summary
    s["cayley_convention"] = CAYLEY_CONVENTION

    try:
        sym = load_symbol(cfg.symbol)
    except (MeanWindError, OSError) as exc:
        _fail(b, "symbolkit", exc, symbol=cfg.symbol)
        return _finish(b, verdicts)
    b.completed.append("symbolkit")
    s["symbol"] = {"source": cfg.symbol, "text": sym.to_text(), "digest": sym.digest, "r": sym.r,
                   "tag": sym.tag, "params": repr(sym.params)}

    trace = None
    if "argtrack" in b.enabled:
        half = cfg.grid.half_width or needed_half_width(cfg)
        grid = SampleGrid.symmetric(cfg.grid.count, half, max_spacing=cfg.grid.max_spacing)
        try:
            trace = unwrap_arg(sym, grid, cfg.grid.max_depth, cfg.grid.max_nodes)
            s["argtrack"] = _argtrack_stage(sym, trace, grid, verdicts)
            b.completed.append("argtrack")
            step = max(1, len(trace) // (SERIES_POINTS - 1))
            idx = np.unique(np.append(np.arange(0, len(trace), step), len(trace) - 1))
            b.tables["arg_series.csv"] = (CSV_SCHEMAS["arg_series.csv"],
                                          list(zip(trace.nodes[idx], trace.values[idx])))
            if cfg.write_trace:
                b.tables["trace.csv"] = (["x", "arg"], list(zip(trace.nodes, trace.values)))
        except MeanWindError as exc:
            _fail(b, "argtrack", exc, grid=grid.to_dict(), max_depth=cfg.grid.max_depth)
            trace = None

    if "winding" in enabled and trace is not None:
        try:
            s["winding"] = _winding_stage(cfg, sym, trace, b, verdicts)
            b.completed.append("winding")
        except MeanWindError as exc:
            _fail(b, "winding", exc, **cfg.to_dict()["winding"])
    if "bmo" in enabled and trace is not None:
        try:
            rep = theorem1_report(trace, dyadic_scales(trace, cfg.bmo.scale_count), cfg.bmo.slope, cfg.bmo.fit_residual)
            s["bmo"] = rep.summary()
            b.tables["bmo.csv"] = (CSV_SCHEMAS["bmo.csv"], [
                (name,) + row for name, prof in (("raw", rep.raw), ("plus", rep.plus), ("minus", rep.minus))
                for row in prof.rows()
            ])
            verdicts.append(_verdict("theorem1.bmo", rep.verdict_bmo, "bmo.raw", "not Phi (arg det G not in BMO)"))
            verdicts.append(_verdict("theorem1.bmo_plus", rep.verdict_plus, "bmo.plus_residual",
                                     "not Phi+ (arg det G not in BMO+)"))
            verdicts.append(_verdict("theorem1.bmo_minus", rep.verdict_minus, "bmo.minus_residual",
                                     "not Phi- (arg det G not in BMO-)"))
            b.completed.append("bmo")
        except MeanWindError as exc:
            _fail(b, "bmo", exc, **cfg.to_dict()["bmo"])
    if "finsec" in enabled:
        try:
            s["finsec"] = _finsec_stage(cfg, sym, b, verdicts)
            b.completed.append("finsec")
        except MeanWindError as exc:
            _fail(b, "finsec", exc, **cfg.to_dict()["finsec"])
    s["cross_checks"] = {"corollary1_finsec": corollary1_consistency(verdicts, s.get("finsec"))}
    return _finish(b, verdicts)


def corollary1_consistency(verdicts, finsec: dict | None) -> dict:
    """Empirical cross-check, reported and never asserted.

    When a Phi+ certificate fires, the smallest singular values of the
    finite sections should decay along ``n``.
    """
    fired = [v["check"] for v in verdicts if v["check"].startswith("corollary1.phi_plus")
             and v["verdict"] == "certificate"]
    if not fired:
        return {"status": "not-triggered"}
    if not finsec or finsec.get("verdict") != "applicable":
        return {"status": "finsec-inapplicable", "fired": fired}
    sigma = [r["sigma_min"] for r in finsec["sections"]]
    decays = all(b <= a * (1 + 1e-9) for a, b in zip(sigma, sigma[1:])) and sigma[-1] < 0.5 * sigma[0]
    return {"status": "decays" if decays else "no-decay", "fired": fired, "sigma_min": sigma}


def _finish(b: Bundle, verdicts) -> Bundle:
    b.summary["verdicts"] = verdicts
    b.summary["errors"] = b.errors
    if b.config.out:
        b.write(b.config.out)
    return b


def _argtrack_stage(sym, trace, grid, verdicts) -> dict:
    mm = min_det_modulus(sym, trace.nodes)
    rec = {"nodes": len(trace), "range": [trace.lo, trace.hi], "max_depth_used": int(trace.depth.max()),
           "min_det_modulus": {"value": mm.value, "argmin": mm.argmin, "grid_dependent": True}}
    verdicts.append(_verdict("theoremA", "certificate" if mm.value < 1e-12 else "no-obstruction",
                             "argtrack.min_det_modulus", "det G not bounded away from 0 (not semi-Fredholm)",
                             min_det_modulus=mm.value))
    try:
        wn = winding_number(trace)
        jump = float(trace.values[-1] - trace.values[0])
        odd = np.round((jump / np.pi - 1) / 2) * 2 + 1
        boundary = bool(abs(jump - odd * np.pi) < BOUNDARY_TOL * max(1.0, abs(jump)))
        equal_limits = abs(wn.residual) < 1e-6
        rec["winding_number"] = {"verdict": "computed", "value": wn.value, "raw": wn.raw, "residual": wn.residual,
                                 "tail_variation": list(wn.tail_variation), "jump": jump,
                                 "equal_limits": equal_limits, "criterion_boundary": boundary}
        if boundary:
            verdicts.append(_verdict("limits.criterion", "certificate", "argtrack.winding_number",
                                     "criterion boundary: arg jump is an odd multiple of pi (not semi-Fredholm)",
                                     jump_over_pi=jump / np.pi))
        else:
            verdicts.append(_verdict("limits.criterion", "no-obstruction", "argtrack.winding_number",
                                     "arg jump is an odd multiple of pi (not semi-Fredholm)",
                                     jump_over_pi=jump / np.pi,
                                     index=(-wn.value if equal_limits else None)))
    except NonConvergentTails as exc:
        rec["winding_number"] = {"verdict": "inapplicable", "reason": str(exc)}
        verdicts.append(_verdict("limits.criterion", "inapplicable", "argtrack.winding_number",
                                 "limits at +-inf", reason=str(exc)))
    window = min(-trace.lo, trace.hi) / 32
    motions = {}
    for side in "+-":
        try:
            m = mean_motion(trace, side, window)
            motions[side] = {"slope": m.slope, "dispersion": m.dispersion, "slopes": list(m.slopes),
                             "windows": list(m.windows)}
        except MeanMotionNotDetected as exc:
            motions[side] = {"verdict": "inapplicable", "reason": str(exc)}
    rec["mean_motion"] = motions
    return rec


def _winding_stage(cfg, sym, trace, b: Bundle, verdicts) -> dict:
    w = cfg.winding
    T = default_T_grid(w.T_max, w.decades, w.per_decade)
    y_rel = _y_rel(w.y_count)
    etas = [resolve_eta(e) for e in w.etas]
    out = {"T_grid": {"T_max": w.T_max, "decades": w.decades, "per_decade": w.per_decade},
           "y_grid": {"relative": True, "count": int(len(np.unique(np.append(y_rel, 0.0)))), "span": "[-T, T]"}}
    rows = []
    out["mean"] = []
    for eta in etas:
        rep = mean_winding(trace, eta, T, y_rel)
        out["mean"].append(rep.estimates())
        rows.extend(rep.rows())
    b.tables["winding.csv"] = (CSV_SCHEMAS["winding.csv"], rows)

    grows, arows = [], []
    out["generalized"], out["w_alpha"] = {}, {}
    for a in w.alphas:
        per = []
        for eta in etas:
            rep = generalized_winding(trace, eta, a, T, y_rel)
            est = rep.estimates()
            per.append(est)
            plus, minus = _corollary1(est)
            src = f"winding.generalized[{a:g}][{eta.name}]"
            verdicts.append(_verdict(f"corollary1.phi_plus[alpha={a:g},{eta.name}]", plus, src,
                                     "generalized lower winding < 0 (not Phi+)", value=est["lower"], drift=est["drift"]))
            verdicts.append(_verdict(f"corollary1.phi_minus[alpha={a:g},{eta.name}]", minus, src,
                                     "generalized upper winding > 0 (not Phi-)", value=est["upper"], drift=est["drift"]))
            grows.extend((a, eta.name, t, y, v) for t, yr, vr in zip(rep.T_grid, rep.y_grid, rep.values)
                         for y, v in zip(yr, vr))
        out["generalized"][f"{a:g}"] = per
        wa = w_alpha(trace, a, T, y_rel)
        out["w_alpha"][f"{a:g}"] = {"upper": wa.upper, "lower": wa.lower, "tilde_upper": wa.tilde_upper,
                                    "tilde_lower": wa.tilde_lower, "drift": wa.drift}
        arows.extend((a, t, y, v) for t, yr, vr in zip(wa.T_grid, wa.y_grid, wa.values) for y, v in zip(yr, vr))
    b.tables["generalized.csv"] = (CSV_SCHEMAS["generalized.csv"], grows)
    b.tables["walpha.csv"] = (CSV_SCHEMAS["walpha.csv"], arows)

    w1 = w_alpha(trace, 1.0, T, y_rel)
    beta = w1.upper / sym.r
    out["beta_lower_bound"] = {"value": beta, "upper_w1": w1.upper, "r": sym.r, "drift": w1.drift}
    # a bound at or below the drift of the estimate certifies nothing
    positive = beta > max(2 * w1.drift, 1e-6)
    verdicts.append(_verdict("corollary3.beta", "certificate" if positive else "no-obstruction",
                             "winding.beta_lower_bound",
                             "beta(G) >= uw_1(G)/r", value=beta, drift=w1.drift))

    chk = theorem2_check(trace, etas, T, y_rel, w.min_slope)
    out["theorem2"] = {
        c.eta_name: {"phi_plus": c.phi_plus.verdict, "phi_minus": c.phi_minus.verdict,
                     "inf_ratio_at_T_max": float(c.phi_plus.extremes[-1]),
                     "sup_ratio_at_T_max": float(c.phi_minus.extremes[-1]),
                     "inf_growth_slope": c.phi_plus.growth_slope, "sup_growth_slope": c.phi_minus.growth_slope,
                     "h1_norm": c.h1}
        for c in chk.checks
    }
    for c in chk.checks:
        verdicts.append(_verdict(f"theorem2.phi_plus[{c.eta_name}]", c.phi_plus.verdict, f"winding.theorem2[{c.eta_name}]",
                                 "ratio inf diverges to -inf (not Phi+)", growth_slope=c.phi_plus.growth_slope))
        verdicts.append(_verdict(f"theorem2.phi_minus[{c.eta_name}]", c.phi_minus.verdict, f"winding.theorem2[{c.eta_name}]",
                                 "ratio sup diverges to +inf (not Phi-)", growth_slope=c.phi_minus.growth_slope))
    return out


def _finsec_stage(cfg, sym, b: Bundle, verdicts) -> dict:
    f = cfg.finsec
    ct = fourier_coeffs(sym, f.K, f.fft_size)
    rec = {"K": ct.K, "fft_size": ct.fft_size, "aliasing_residual": ct.residual, "residual_tol": f.residual_tol}
    try:
        ie = index_estimate(ct, f.n_list, f.residual_tol, threshold_rel=f.kernel_rel)
    except FinsecInapplicable as exc:
        rec["verdict"] = "inapplicable"
        rec["reason"] = str(exc)
        verdicts.append(_verdict("finsec.index", "inapplicable", "finsec", "ind T_G = -wind det G", reason=str(exc)))
        return rec
    rec["verdict"] = "applicable"
    rec["index"] = {"value": ie.index, "route": ie.route, "winding": ie.winding, "winding_raw": ie.winding_raw,
                    "cross_check": ie.cross_check, "consistent": ie.consistent}
    hank = {}
    if sym.r == 1:
        probe = phi_n_probe(sym, f.N, f.K, f.n_list, f.margin, f.fft_size, f.residual_tol)
        rec["phi_n_probe"] = {"distances": list(probe.distances), "verdicts": list(probe.verdicts),
                              "success_n": probe.success_n, "certificate": probe.certificate}
        verdicts.append(_verdict("lemma.phi_n_probe", "certificate" if probe.success_n is not None else "inapplicable",
                                 "finsec.phi_n_probe", "T_(phi^n G) left invertible for some n (Phi+ consistent)",
                                 detail=probe.certificate))
        hank = dict(zip(f.n_list, probe.hankel_sigma))
    b.tables["finsec.csv"] = (CSV_SCHEMAS["finsec.csv"], [
        (r.n, r.sigma_min, r.kernel_dim, r.cokernel_dim, hank.get(r.n)) for r in ie.sections.records
    ])
    b.tables["coeffs.csv"] = (CSV_SCHEMAS["coeffs.csv"], list(ct.rows()))
    rec["sections"] = [{"n": r.n, "sigma_min": r.sigma_min, "kernel_dim": r.kernel_dim,
                        "cokernel_dim": r.cokernel_dim, "threshold": r.threshold, "stable": r.stable}
                       for r in ie.sections.records]
    verdicts.append(_verdict("finsec.index", "no-obstruction", "finsec.index", "ind T_G = -wind det G",
                             index=ie.index, cross_check=ie.cross_check, consistent=ie.consistent))
    return rec
