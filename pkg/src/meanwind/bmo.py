"""Finite-window mean-oscillation diagnostics.

BMO membership on the whole line cannot be decided from finite data.
What can be observed is growth: if the worst mean oscillation over windows
of length ``L`` keeps increasing like a power of ``L``, the function is not
in BMO on the sampled range.  The BMO+/BMO- variants first remove the best
monotone L2 fit (isotonic regression) and look at the residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from .argtrack import ArgumentTrace
from .exceptions import BMOError

GROWTH_SLOPE = 0.2
GROWTH_RESIDUAL = 0.1
FIT_SCALES = 4
FINITE_WINDOW_NOTE = "finite-window surrogate: only growth obstructions are certified, never membership"


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    h = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


def mean_oscillation(trace: ArgumentTrace, a: float, b: float) -> float:
    """``(1/|J|) int_J |f - f_J|`` on ``J = [a, b]``, exact for the piecewise-linear trace."""
    if not (trace.lo <= a < b <= trace.hi):
        raise BMOError(f"window [{a}, {b}] not inside trace range [{trace.lo}, {trace.hi}]")
    i0, i1 = np.searchsorted(trace.nodes, [a, b], side="right")
    x = np.concatenate([[a], trace.nodes[i0:i1], [b]])
    f = np.concatenate([trace([a]), trace.values[i0:i1], trace([b])])
    keep = np.concatenate([[True], np.diff(x) > 0])
    x, f = x[keep], f[keep]
    h = np.diff(x)
    mean = float(np.sum(h * (f[:-1] + f[1:]) / 2) / (b - a))
    g0, g1 = f[:-1] - mean, f[1:] - mean
    same = g0 * g1 >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        # a sign change splits the segment into two triangles
        crossing = h * (g0**2 + g1**2) / (2 * np.abs(g0 - g1))
    seg = np.where(same, h * np.abs(g0 + g1) / 2, crossing)
    return float(np.sum(seg) / (b - a))


@dataclass(frozen=True)
class GrowthFit:
    slope: float
    residual: float
    obstruction: bool
    scales_used: tuple[float, ...]


@dataclass(frozen=True)
class OscillationProfile:
    """Worst mean oscillation per dyadic scale, with a log-log growth fit."""

    scales: np.ndarray
    worst_location: np.ndarray
    oscillation: np.ndarray
    center: float
    fit: GrowthFit

    def __post_init__(self):
        if np.any(self.oscillation < 0):
            raise AssertionError("negative mean oscillation")

    def rows(self):
        for L, c, v in zip(self.scales, self.worst_location, self.oscillation):
            yield (float(L), float(c), float(v))


def dyadic_scales(trace: ArgumentTrace, count: int = 10) -> np.ndarray:
    """``count`` powers of two, the largest not exceeding a quarter of the trace range."""
    span = trace.hi - trace.lo
    top = int(np.floor(np.log2(span / 4)))
    return 2.0 ** np.arange(top - count + 1, top + 1)


def _window_starts(trace: ArgumentTrace, L: float, center: float) -> np.ndarray:
    starts = center - L / 2 + L / 4 * np.arange(-6, 7)
    starts = np.clip(starts, trace.lo, trace.hi - L)
    return np.unique(starts)


def growth_fit(scales, osc, slope_min: float = GROWTH_SLOPE, residual_max: float = GROWTH_RESIDUAL,
               n_fit: int = FIT_SCALES) -> GrowthFit:
    """Power-law fit across the top ``n_fit`` scales; obstruction needs slope and a clean fit."""
    L = np.asarray(scales, dtype=float)[-n_fit:]
    v = np.asarray(osc, dtype=float)[-n_fit:]
    if len(L) < 2 or np.any(v <= 1e-12 * max(1.0, float(np.max(np.abs(osc))))):
        return GrowthFit(0.0, 0.0, False, tuple(L))
    coef = np.polyfit(np.log(L), np.log(v), 1)
    res = float(np.sqrt(np.mean((np.polyval(coef, np.log(L)) - np.log(v)) ** 2)))
    slope = float(coef[0])
    return GrowthFit(slope, res, bool(slope > slope_min and res < residual_max), tuple(L))


def oscillation_profile(trace: ArgumentTrace, scales=None, center: float | None = None,
                        slope_min: float = GROWTH_SLOPE, residual_max: float = GROWTH_RESIDUAL) -> OscillationProfile:
    """Sup of the mean oscillation over sliding windows at each dyadic scale.

    Windows of length ``L`` slide with stride ``L/4`` over ``[c - 2L, c + 2L]``
    (shifted into the trace range) where ``c`` is 0 when it lies in the
    range and the midpoint otherwise.
    """
    scales = dyadic_scales(trace) if scales is None else np.asarray(scales, dtype=float)
    if np.any(scales <= 0):
        raise BMOError("scales must be positive")
    logs = np.log2(scales)
    if np.any(np.abs(logs - np.round(logs)) > 1e-12) or np.any(np.diff(logs) <= 0):
        raise BMOError("scales must be strictly increasing powers of two")
    if scales[-1] > trace.hi - trace.lo:
        raise BMOError(f"scale {scales[-1]:g} exceeds trace range {trace.hi - trace.lo:g}")
    if center is None:
        center = 0.0 if trace.lo < 0 < trace.hi else (trace.lo + trace.hi) / 2
    worst, where = [], []
    for L in scales:
        starts = _window_starts(trace, L, center)
        vals = [mean_oscillation(trace, s, s + L) for s in starts]
        k = int(np.argmax(vals))
        worst.append(vals[k])
        where.append(starts[k] + L / 2)
    osc = np.array(worst)
    return OscillationProfile(scales, np.array(where), osc, float(center),
                              growth_fit(scales, osc, slope_min, residual_max))


def monotone_split(trace: ArgumentTrace, direction: str) -> tuple[ArgumentTrace, ArgumentTrace]:
    """Split ``f = u + v`` with ``v`` the weighted isotonic L2 fit.

    ``direction='+'`` fits a nondecreasing ``v``, ``'-'`` a nonincreasing one.
    Weights are the trapezoid weights of the nodes, so the fit approximates
    the continuous L2 projection.  Returns ``(u, v)``.
    """
    if direction not in ("+", "-"):
        raise BMOError("direction must be '+' or '-'")
    w = _trapezoid_weights(trace.nodes)
    res = isotonic_regression(trace.values, weights=w, increasing=direction == "+")
    v = np.asarray(res.x, dtype=float)
    return trace.with_values(trace.values - v), trace.with_values(v)


@dataclass(frozen=True)
class Theorem1Report:
    raw: OscillationProfile
    plus: OscillationProfile
    minus: OscillationProfile
    classification: str
    verdict_bmo: str
    verdict_plus: str
    verdict_minus: str
    slope_min: float
    residual_max: float
    note: str = FINITE_WINDOW_NOTE

    def summary(self) -> dict:
        def prof(p):
            return {"slope": p.fit.slope, "residual": p.fit.residual, "obstruction": p.fit.obstruction,
                    "max_oscillation": float(p.oscillation.max())}
        return {
            "classification": self.classification,
            "bmo": self.verdict_bmo,
            "bmo_plus": self.verdict_plus,
            "bmo_minus": self.verdict_minus,
            "raw": prof(self.raw),
            "plus_residual": prof(self.plus),
            "minus_residual": prof(self.minus),
            "threshold": {"slope": self.slope_min, "fit_residual": self.residual_max, "fit_scales": FIT_SCALES},
            "note": self.note,
        }


def theorem1_report(trace: ArgumentTrace, scales=None, slope_min: float = GROWTH_SLOPE,
                    residual_max: float = GROWTH_RESIDUAL) -> Theorem1Report:
    """Growth diagnostics for ``arg det G`` in BMO, BMO+ and BMO-.

    Growth of the raw profile rules out ``Phi``; growth after removing a
    nondecreasing fit rules out ``Phi_+``; after a nonincreasing fit, ``Phi_-``.
    """
    scales = dyadic_scales(trace) if scales is None else scales
    raw = oscillation_profile(trace, scales, slope_min=slope_min, residual_max=residual_max)
    plus = oscillation_profile(monotone_split(trace, "+")[0], scales, slope_min=slope_min, residual_max=residual_max)
    minus = oscillation_profile(monotone_split(trace, "-")[0], scales, slope_min=slope_min, residual_max=residual_max)
    p, m = plus.fit.obstruction, minus.fit.obstruction
    if p and m:
        cls = "obstruction to both BMO+ and BMO- (not Phi)"
    elif p:
        cls = "obstruction to BMO+ (not Phi+)"
    elif m:
        cls = "obstruction to BMO- (not Phi-)"
    elif raw.fit.obstruction:
        cls = "obstruction to BMO (not Phi)"
    else:
        cls = "no obstruction found"

    def verdict(flag):
        return "certificate" if flag else "no-obstruction"

    return Theorem1Report(raw, plus, minus, cls, verdict(raw.fit.obstruction), verdict(p), verdict(m),
                          slope_min, residual_max)
