"""Mean winding numbers of ``arg det G`` against dilated test functions.

Every pairing

    (1/T) * int eta((x - y)/T) * arg(x) dx

is integrated exactly on the piecewise-linear trace, so the only error is
the trace itself.  Limits in ``T`` are replaced by extrema over the last
decade of a log-spaced grid, and each estimate carries its drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .argtrack import ArgumentTrace
from .exceptions import WindingError
from .hardy import TestFunction, eta_alpha, h1_norm

DEFAULT_Y_REL = np.linspace(-1.0, 1.0, 41)


def default_T_grid(T_max: float, decades: int = 3, per_decade: int = 10) -> np.ndarray:
    """Log-spaced ``T`` grid ending at ``T_max`` and spanning ``decades`` decades."""
    if not T_max > 0:
        raise WindingError(f"T_max must be positive, got {T_max}")
    return np.logspace(np.log10(T_max) - decades, np.log10(T_max), decades * per_decade + 1)


def required_range(eta: TestFunction, T_grid, y_rel=DEFAULT_Y_REL) -> tuple[float, float]:
    """Trace range needed to evaluate every pairing of a sweep."""
    T = np.asarray(T_grid, dtype=float)
    s = np.asarray(y_rel, dtype=float)
    lo = np.min(T[:, None] * (s.min() + eta.a[0]))
    hi = np.max(T[:, None] * (s.max() + eta.a[-1]))
    return float(lo), float(hi)


def _y_values(T: np.ndarray, y_rel, y_abs) -> np.ndarray:
    if y_abs is not None:
        y = np.unique(np.append(np.asarray(y_abs, dtype=float), 0.0))
        return np.broadcast_to(y, (len(T), len(y))).copy()
    s = np.unique(np.append(np.asarray(y_rel, dtype=float), 0.0))
    return T[:, None] * s[None, :]


def _pairings(trace: ArgumentTrace, eta: TestFunction, T: float, y: np.ndarray) -> np.ndarray:
    pts = y[:, None] + T * eta.a[None, :]
    lo, hi = float(pts.min()), float(pts.max())
    if lo < trace.lo or hi > trace.hi:
        raise WindingError(
            f"support of eta_(T,y) needs the trace on [{lo:g}, {hi:g}], "
            f"have [{trace.lo:g}, {trace.hi:g}]"
        )
    F = trace.antiderivative(pts)
    seg = np.diff(F, axis=1)
    return (seg @ eta.v.astype(np.longdouble) / T).astype(float)


def pairing(trace: ArgumentTrace, eta: TestFunction, T: float, y: float = 0.0) -> float:
    """``(1/T) int eta((x-y)/T) arg(x) dx``, exact on the piecewise-linear trace."""
    if not T > 0:
        raise WindingError(f"T must be positive, got {T}")
    return float(_pairings(trace, eta, float(T), np.array([float(y)]))[0])


@dataclass(frozen=True)
class WindingReport:
    """Finite-grid surrogate of the upper, lower and ``y = 0`` mean winding numbers.

    ``values[i, j]`` is the normalised pairing at ``T_grid[i]`` and
    ``y_grid[i, j]``.  ``upper``/``lower`` are the max/min over the last
    decade of ``T`` of the sup/inf over ``y``; ``tilde_upper``/``tilde_lower``
    do the same for ``y = 0``.  ``drift`` is the largest spread of the
    per-``T`` extremes over that decade and ``decade_drift`` lists the spread
    per decade, oldest first.
    """

    eta_name: str
    normalization: str
    T_grid: np.ndarray
    y_grid: np.ndarray
    values: np.ndarray
    h1: float
    sup_y: np.ndarray = field(init=False)
    inf_y: np.ndarray = field(init=False)
    at_zero: np.ndarray = field(init=False)
    upper: float = field(init=False)
    lower: float = field(init=False)
    tilde_upper: float = field(init=False)
    tilde_lower: float = field(init=False)
    drift: float = field(init=False)
    decade_drift: tuple = field(init=False)

    def __post_init__(self):
        T = self.T_grid
        sup_y = self.values.max(axis=1)
        inf_y = self.values.min(axis=1)
        j0 = np.argmin(np.abs(self.y_grid), axis=1)
        at_zero = self.values[np.arange(len(T)), j0]
        last = T >= T[-1] / 10 * (1 - 1e-12)
        upper, lower = float(sup_y[last].max()), float(inf_y[last].min())
        tu, tl = float(at_zero[last].max()), float(at_zero[last].min())
        if not lower <= tl <= tu <= upper:
            raise AssertionError("mean winding chain w <= w~ <= w~' <= uw violated")
        drift = float(max(np.ptp(sup_y[last]), np.ptp(inf_y[last])))
        decades = []
        top = T[-1]
        for d in range(3):
            m = (T <= top / 10**d * (1 + 1e-12)) & (T >= top / 10 ** (d + 1) * (1 - 1e-12))
            if m.sum() >= 2:
                decades.append((float(top / 10 ** (d + 1)), float(max(np.ptp(sup_y[m]), np.ptp(inf_y[m])))))
        for name, val in [
            ("sup_y", sup_y), ("inf_y", inf_y), ("at_zero", at_zero), ("upper", upper), ("lower", lower),
            ("tilde_upper", tu), ("tilde_lower", tl), ("drift", drift), ("decade_drift", tuple(reversed(decades))),
        ]:
            object.__setattr__(self, name, val)

    @property
    def ratios(self) -> np.ndarray:
        """``int eta_(T,y) arg / ||eta_(T,y)||_H1``, which equals the pairing over ``||eta||_H1``."""
        return self.values / self.h1

    def estimates(self) -> dict:
        return {
            "eta": self.eta_name,
            "normalization": self.normalization,
            "upper": self.upper,
            "lower": self.lower,
            "tilde_upper": self.tilde_upper,
            "tilde_lower": self.tilde_lower,
            "drift": self.drift,
            "decade_drift": [list(d) for d in self.decade_drift],
            "T_range": [float(self.T_grid[0]), float(self.T_grid[-1])],
            "T_count": int(len(self.T_grid)),
            "y_count": int(self.y_grid.shape[1]),
        }

    def rows(self):
        """CSV rows ``eta_id, T, y, pairing, h1_norm, ratio`` in grid order."""
        for i, T in enumerate(self.T_grid):
            for j, y in enumerate(self.y_grid[i]):
                v = self.values[i, j]
                yield (self.eta_name, float(T), float(y), float(v), float(T * self.h1), float(v / self.h1))


def _sweep(trace, eta, T_grid, y_rel, y_abs, scale: Callable[[float], float], normalization: str) -> WindingReport:
    T = np.asarray(T_grid, dtype=float)
    if T.ndim != 1 or len(T) < 2 or np.any(T <= 0) or np.any(np.diff(T) <= 0):
        raise WindingError("T_grid must be ascending, positive, with at least two points")
    y = _y_values(T, y_rel, y_abs)
    vals = np.empty_like(y)
    for i, t in enumerate(T):
        vals[i] = _pairings(trace, eta, float(t), y[i]) * scale(float(t))
    return WindingReport(eta.name, normalization, T, y, vals, h1_norm(eta).value)


def mean_winding(trace: ArgumentTrace, eta: TestFunction, T_grid, y_rel=DEFAULT_Y_REL, y_grid=None) -> WindingReport:
    """Upper, lower and ``y = 0`` mean winding numbers with normalisation ``1/T``.

    Translations default to ``y = s*T`` for ``s`` in ``y_rel``; pass
    ``y_grid`` for fixed absolute translations.  ``y = 0`` is always added.
    """
    return _sweep(trace, eta, T_grid, y_rel, y_grid, lambda T: 1.0, "1/T")


def generalized_winding(trace, eta, alpha: float | None = None, T_grid=None, y_rel=DEFAULT_Y_REL,
                        y_grid=None, rho: Callable[[float], float] | None = None) -> WindingReport:
    """Winding numbers with normalisation ``1/T^(1+alpha)``, or ``1/rho(T)`` when ``rho`` is given."""
    if T_grid is None:
        raise WindingError("T_grid is required")
    if rho is not None:
        return _sweep(trace, eta, T_grid, y_rel, y_grid, lambda T: T / rho(T), "1/rho(T)")
    if alpha is None or not alpha > 0:
        raise WindingError(f"alpha must be positive, got {alpha}")
    return _sweep(trace, eta, T_grid, y_rel, y_grid, lambda T: T ** (-alpha), f"1/T^{1 + alpha:g}")


@dataclass(frozen=True)
class AlphaWinding:
    alpha: float
    upper: float
    lower: float
    tilde_upper: float
    tilde_lower: float
    drift: float
    T_grid: np.ndarray
    y_grid: np.ndarray
    values: np.ndarray


def w_alpha(trace: ArgumentTrace, alpha: float, T_grid, y_rel=DEFAULT_Y_REL, y_grid=None) -> AlphaWinding:
    """Window-difference form ``(1+a)/(2T^(1+a)) [int_y^(T+y) - int_(y-T)^y] arg``."""
    if not alpha > 0:
        raise WindingError(f"alpha must be positive, got {alpha}")
    T = np.asarray(T_grid, dtype=float)
    if T.ndim != 1 or len(T) < 2 or np.any(T <= 0) or np.any(np.diff(T) <= 0):
        raise WindingError("T_grid must be ascending, positive, with at least two points")
    y = _y_values(T, y_rel, y_grid)
    lo, hi = float((y - T[:, None]).min()), float((y + T[:, None]).max())
    if lo < trace.lo or hi > trace.hi:
        raise WindingError(f"window sweep needs the trace on [{lo:g}, {hi:g}], have [{trace.lo:g}, {trace.hi:g}]")
    vals = np.empty_like(y)
    for i, t in enumerate(T):
        F = trace.antiderivative(np.stack([y[i] - t, y[i], y[i] + t]))
        bracket = (F[2] - F[1]) - (F[1] - F[0])
        vals[i] = ((1 + alpha) / (2 * t ** (1 + alpha)) * bracket).astype(float)
    last = T >= T[-1] / 10 * (1 - 1e-12)
    sup_y, inf_y = vals.max(axis=1), vals.min(axis=1)
    at_zero = vals[np.arange(len(T)), np.argmin(np.abs(y), axis=1)]
    drift = float(max(np.ptp(sup_y[last]), np.ptp(inf_y[last])))
    return AlphaWinding(float(alpha), float(sup_y[last].max()), float(inf_y[last].min()),
                        float(at_zero[last].max()), float(at_zero[last].min()), drift, T, y, vals)


@dataclass(frozen=True)
class BetaBound:
    value: float
    upper_w1: float
    r: int
    drift: float


def beta_lower_bound(trace: ArgumentTrace, r: int, T_grid, y_rel=DEFAULT_Y_REL) -> BetaBound:
    """``beta(G) >= uw_1(G) / r``, the least controllability time bound."""
    if int(r) < 1:
        raise WindingError(f"matrix size r must be positive, got {r}")
    w = w_alpha(trace, 1.0, T_grid, y_rel)
    return BetaBound(w.upper / int(r), w.upper, int(r), w.drift)


@dataclass(frozen=True)
class SideCertificate:
    verdict: str  # "certificate" or "no-obstruction"
    extremes: np.ndarray
    running: np.ndarray
    monotone: bool
    growth_slope: float


@dataclass(frozen=True)
class EtaCheck:
    eta_name: str
    h1: float
    phi_plus: SideCertificate
    phi_minus: SideCertificate
    report: WindingReport


@dataclass(frozen=True)
class Theorem2Check:
    """Pairing-to-H1 ratios per test function with one-sided certificates.

    A ratio inf diverging to ``-inf`` rules out ``Phi_+``; a ratio sup
    diverging to ``+inf`` rules out ``Phi_-``.  Nothing here ever asserts
    that the operator *is* semi-Fredholm.
    """

    checks: tuple[EtaCheck, ...]
    min_slope: float
    min_magnitude: float

    @property
    def phi_plus(self) -> str:
        return "certificate" if any(c.phi_plus.verdict == "certificate" for c in self.checks) else "no-obstruction"

    @property
    def phi_minus(self) -> str:
        return "certificate" if any(c.phi_minus.verdict == "certificate" for c in self.checks) else "no-obstruction"


def _divergence(T: np.ndarray, ext: np.ndarray, sign: int, min_slope: float, min_magnitude: float) -> SideCertificate:
    running = np.minimum.accumulate(ext) if sign < 0 else np.maximum.accumulate(ext)
    last = T >= T[-1] / 10 * (1 - 1e-12)
    e, t = ext[last], T[last]
    # sign > 0: strictly increasing towards +inf; sign < 0: strictly decreasing towards -inf
    monotone = bool(np.all(sign * np.diff(e) > 0))
    slope = 0.0
    if np.all(sign * e > min_magnitude):
        slope = float(np.polyfit(np.log(t), np.log(np.abs(e)), 1)[0])
    fires = monotone and slope > min_slope
    return SideCertificate("certificate" if fires else "no-obstruction", ext, running, monotone, slope)


def theorem2_check(trace: ArgumentTrace, etas, T_grid, y_rel=DEFAULT_Y_REL,
                   min_slope: float = 0.2, min_magnitude: float = 1e-6) -> Theorem2Check:
    """Track ``int eta_(T,y) arg / ||eta_(T,y)||_H1`` over the sweep.

    The ``Phi_+`` certificate fires when the per-``T`` infimum decreases
    strictly over the last decade and its magnitude grows with log-log
    slope above ``min_slope``; ``Phi_-`` is the mirror image.
    """
    checks = []
    for eta in etas:
        rep = mean_winding(trace, eta, T_grid, y_rel)
        ratios = rep.ratios
        T = rep.T_grid
        plus = _divergence(T, ratios.min(axis=1), -1, min_slope, min_magnitude)
        minus = _divergence(T, ratios.max(axis=1), +1, min_slope, min_magnitude)
        checks.append(EtaCheck(eta.name, rep.h1, plus, minus, rep))
    return Theorem2Check(tuple(checks), min_slope, min_magnitude)


def default_etas() -> list[TestFunction]:
    """``eta_1``, ``eta_1/2`` and an asymmetric three-step element of the cone."""
    return [eta_alpha(1.0), eta_alpha(0.5), TestFunction((-2.0, -1.0, 0.5, 3.0), (-1.0, 0.2, 0.28), "step3")]
