"""Real-variable Hardy space tools.

Test functions are compactly supported mean-zero step functions with
nonpositive running integral.  For these the Hilbert transform has the
closed form

    H eta(x) = (1/pi) * sum_k J_k log|x - a_k|,

with ``J_k`` the jump of ``eta`` at breakpoint ``a_k``; its antiderivative
``(1/pi) sum_k J_k (x - a_k) log|x - a_k|`` vanishes at both infinities
when ``eta`` has mean zero, so ``||H eta||_1`` reduces to evaluating that
antiderivative at the sign changes of ``H eta``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .exceptions import HardyError
from .symbolkit import SampleGrid, SymbolSpec, det_eval


class BreakpointWarning(UserWarning):
    """Hilbert transform requested exactly at a breakpoint (log singularity)."""


@dataclass(frozen=True)
class TestFunction:
    """Step function ``levels[j]`` on ``(breakpoints[j], breakpoints[j+1])``, zero outside."""

    __test__ = False  # not a pytest class

    breakpoints: tuple[float, ...]
    levels: tuple[float, ...]
    name: str = "custom"

    def __post_init__(self):
        a = tuple(float(v) for v in self.breakpoints)
        v = [float(t) for t in self.levels]
        if len(a) != len(v) + 1 or len(v) < 1:
            raise HardyError("need m+1 breakpoints for m levels")
        if any(b <= c for b, c in zip(a[1:], a[:-1])):
            raise HardyError("breakpoints must be strictly increasing")
        if not all(math.isfinite(t) for t in a + tuple(v)):
            raise HardyError("breakpoints and levels must be finite")
        widths = [b - c for b, c in zip(a[1:], a[:-1])]
        scale = math.fsum(abs(t) * w for t, w in zip(v, widths))
        if scale == 0:
            raise HardyError("test function must not vanish identically")
        total = math.fsum(t * w for t, w in zip(v, widths))
        if abs(total) > 1e-14 * scale:
            raise HardyError(f"test function has nonzero mean {total!r}; elements of the cone integrate to 0")
        # absorb the rounding-level mean into the last level
        v[-1] -= total / widths[-1]
        cum = np.cumsum([t * w for t, w in zip(v, widths)])
        if np.any(cum > 1e-12 * scale):
            raise HardyError("running integral becomes positive; not in the cone")
        object.__setattr__(self, "breakpoints", a)
        object.__setattr__(self, "levels", tuple(v))

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self.breakpoints)

    @property
    def v(self) -> np.ndarray:
        return np.asarray(self.levels)

    @property
    def jumps(self) -> np.ndarray:
        v = np.concatenate([[0.0], self.v, [0.0]])
        return np.diff(v)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        j = np.searchsorted(self.a, x, side="right") - 1
        inside = (j >= 0) & (j < len(self.levels))
        return np.where(inside, self.v[np.clip(j, 0, len(self.levels) - 1)], 0.0)

    def l1_norm(self) -> float:
        return math.fsum(abs(t) * w for t, w in zip(self.levels, np.diff(self.a)))

    def moment(self, n: int) -> float:
        """``int t^n eta(t) dt``."""
        a = self.a
        return math.fsum(t * (hi ** (n + 1) - lo ** (n + 1)) / (n + 1) for t, lo, hi in zip(self.levels, a[:-1], a[1:]))

    def cumulative(self, x):
        """Running integral ``int_{-inf}^x eta``."""
        x = np.asarray(x, dtype=float)
        a, v = self.a, self.v
        seg = np.clip(x[..., None], a[:-1], a[1:]) - a[:-1]
        return seg @ v

    def reflected(self) -> "TestFunction":
        """``-eta(-x)``, which stays in the cone."""
        return TestFunction(tuple(-t for t in reversed(self.breakpoints)), tuple(-t for t in reversed(self.levels)), f"refl({self.name})")

    def to_dict(self) -> dict:
        return {"name": self.name, "breakpoints": list(self.breakpoints), "levels": list(self.levels)}

    @classmethod
    def from_dict(cls, d: dict) -> "TestFunction":
        return cls(tuple(d["breakpoints"]), tuple(d["levels"]), d.get("name", "custom"))


def eta_alpha(alpha: float) -> TestFunction:
    """``(1+alpha)/2 * (chi_[0,1] - chi_[-1,0])``."""
    if not alpha > 0:
        raise HardyError(f"alpha must be positive, got {alpha}")
    c = (1 + alpha) / 2
    return TestFunction((-1.0, 0.0, 1.0), (-c, c), f"eta_{alpha:g}")


def scale_translate(eta: TestFunction, T: float, y: float) -> TestFunction:
    """``eta((x - y)/T)``."""
    if not T > 0:
        raise HardyError(f"scale T must be positive, got {T}")
    a = tuple(b * T + y for b in eta.breakpoints)
    # rounding in the mapped breakpoints leaves a tiny mean; absorb it as the constructor does
    widths = [hi - lo for lo, hi in zip(a[:-1], a[1:])]
    v = list(eta.levels)
    v[-1] -= math.fsum(t * w for t, w in zip(v, widths)) / widths[-1]
    return TestFunction(a, tuple(v), f"{eta.name}@T={T:g},y={y:g}")


def hilbert_step(eta: TestFunction, x):
    """Closed-form Hilbert transform ``(1/pi) PV int eta(t)/(x - t) dt``.

    At a breakpoint the principal value diverges logarithmically; the mean
    of the values at ``x -+ 1e-12`` is returned and a ``BreakpointWarning``
    issued.
    """
    x = np.asarray(x, dtype=float)
    hit = np.isin(x, eta.a)
    if np.any(hit):
        warnings.warn("Hilbert transform evaluated at a breakpoint; averaged x -+ 1e-12", BreakpointWarning, stacklevel=2)
        eps = 1e-12 * np.maximum(1.0, np.abs(x))
        return np.where(hit, (_hilbert(eta, x - eps) + _hilbert(eta, x + eps)) / 2, _hilbert(eta, np.where(hit, x + 1, x)))
    return _hilbert(eta, x)


def _hilbert(eta: TestFunction, x):
    J = eta.jumps
    with np.errstate(divide="ignore"):
        return (np.log(np.abs(np.asarray(x)[..., None] - eta.a)) @ J) / np.pi


def _hilbert_antiderivative(eta: TestFunction, x):
    d = np.asarray(x, dtype=float)[..., None] - eta.a
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(d == 0, 0.0, d * np.log(np.abs(d)))
    return (t @ eta.jumps) / np.pi


def _sign_changes(eta: TestFunction) -> np.ndarray:
    a = eta.a
    span = a[-1] - a[0]
    pieces = []
    u = (1 - np.cos(np.pi * np.linspace(0, 1, 402)[1:-1])) / 2
    edge = np.geomspace(1e-13, 1e-2, 60)
    for lo, hi in zip(a[:-1], a[1:]):
        w = hi - lo
        pieces.append(lo + w * np.concatenate([edge, u, 1 - edge[::-1]]))
    # beyond a few thousand spans H eta ~ m1/(pi x^2) with m1 = -int(running integral) > 0,
    # so no sign change remains; sampling further only picks up cancellation noise
    far = span * np.geomspace(1e-13, 1e4, 500)
    pieces.append(a[0] - far[::-1])
    pieces.append(a[-1] + far)
    xs = np.unique(np.concatenate(pieces))
    xs = xs[~np.isin(xs, a)]
    hv = _hilbert(eta, xs)
    roots = []
    for k in np.flatnonzero(np.sign(hv[:-1]) * np.sign(hv[1:]) < 0):
        lo, hi = xs[k], xs[k + 1]
        if np.any((a > lo) & (a < hi)):
            continue  # sign flip across a log singularity, not a zero
        roots.append(optimize.brentq(lambda s: float(_hilbert(eta, s)), lo, hi, xtol=1e-15 * max(1.0, abs(lo)), rtol=1e-15))
    roots.extend(xs[hv == 0])
    return np.sort(np.asarray(roots, dtype=float))


@dataclass(frozen=True)
class H1Norm:
    value: float
    l1: float
    hilbert_l1: float
    error_bound: float
    method: str


def hilbert_l1(eta: TestFunction) -> tuple[float, float]:
    """``||H eta||_1`` from the closed-form antiderivative; returns (value, error bound)."""
    roots = _sign_changes(eta)
    phi = _hilbert_antiderivative(eta, roots)
    knots = np.concatenate([[0.0], phi, [0.0]])
    value = float(np.sum(np.abs(np.diff(knots))))
    # rounding in the antiderivative at each knot dominates (H eta vanishes at the roots)
    d = roots[:, None] - eta.a
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.where(d == 0, 0.0, np.abs(d * np.log(np.abs(d))))
    bound = 8 * np.finfo(float).eps * float(np.sum(mag @ np.abs(eta.jumps))) / np.pi
    return value, bound + 4 * np.finfo(float).eps * value


def hilbert_l1_quadrature(eta: TestFunction, R: float | None = None) -> tuple[float, float]:
    """Independent route: adaptive quadrature on ``[a0 - R, am + R]`` plus a moment tail.

    Beyond the window ``H eta(x) = m1/(pi x^2) + m2/(pi x^3) + ...``; the tail
    contributes ``|m1| / (pi X)`` per side to leading order, with the
    next term kept as the error estimate.
    """
    a = eta.a
    span = a[-1] - a[0]
    R = 1e3 * span if R is None else R
    lo, hi = a[0] - R, a[-1] + R
    f = lambda s: abs(float(_hilbert(eta, s)))
    pts = list(a)
    grid = np.concatenate([a[0] - span * np.geomspace(R / span, 1e-3, 25), a, a[-1] + span * np.geomspace(1e-3, R / span, 25)])
    grid = np.unique(np.concatenate([grid, np.linspace(a[0], a[-1], 9)]))
    total, err = 0.0, 0.0
    for s0, s1 in zip(grid[:-1], grid[1:]):
        inner = [p for p in pts if s0 < p < s1]
        val, e = integrate.quad(f, s0, s1, points=inner or None, limit=200, epsabs=1e-14, epsrel=1e-12)
        total += val
        err += e
    c = 0.5 * (a[0] + a[-1])
    m1 = eta.moment(1) - c * eta.moment(0)
    m2 = eta.moment(2) - 2 * c * eta.moment(1) + c * c * eta.moment(0)
    for X in (hi - c, c - lo):
        total += abs(m1) / (math.pi * X)
        err += abs(m2) / (2 * math.pi * X * X)
    return total, err


def h1_norm(eta: TestFunction, method: str = "closed") -> H1Norm:
    """``||eta||_1 + ||H eta||_1``."""
    if abs(math.fsum(t * w for t, w in zip(eta.levels, np.diff(eta.a)))) > 1e-12 * eta.l1_norm():
        raise HardyError("nonzero mean: H eta is not integrable")
    if method == "closed":
        h, err = hilbert_l1(eta)
    elif method == "quadrature":
        h, err = hilbert_l1_quadrature(eta)
    else:
        raise ValueError(f"unknown method {method!r}")
    l1 = eta.l1_norm()
    return H1Norm(l1 + h, l1, h, err, method)


# ---------------------------------------------------------------------------
# outer functions on the upper half-plane


@dataclass(frozen=True)
class OuterValue:
    value: np.ndarray
    tail_contribution: np.ndarray


def outer_from_modulus(t, k, z, return_tails: bool = False):
    """Outer function with boundary modulus ``k`` evaluated at ``z`` (``Im z > 0``).

    ``exp((1/(pi i)) int [1/(s - z) - s/(1 + s^2)] log k(s) ds)`` with the
    unimodular constant fixed to 1.  ``log k`` is interpolated linearly
    between the nodes ``t`` and held at its edge values outside, which makes
    every piece of the integral elementary.
    """
    t = np.asarray(t, dtype=float)
    k = np.asarray(k, dtype=float)
    if t.ndim != 1 or t.shape != k.shape or len(t) < 2 or np.any(np.diff(t) <= 0):
        raise HardyError("modulus must be sampled on a strictly increasing grid")
    if np.any(~(k > 0)):
        raise HardyError("modulus must be positive at every node")
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise HardyError("outer function is evaluated in the open upper half-plane only")
    ell = np.log(k)
    zz = z[..., None]
    ta, tb = t[:-1], t[1:]
    la, lb = ell[:-1], ell[1:]
    beta = (lb - la) / (tb - ta)
    alpha = la - beta * ta
    logd = np.log(t - zz)  # principal branch, continuous for Im z > 0
    cauchy = beta * (tb - ta) + (alpha + beta * zz) * (logd[..., 1:] - logd[..., :-1])
    half = 0.5 * np.log1p(t * t)
    conv = alpha * (half[1:] - half[:-1]) + beta * ((tb - np.arctan(tb)) - (ta - np.arctan(ta)))
    body = np.sum(cauchy, axis=-1) - np.sum(conv)
    right = -ell[-1] * (logd[..., -1] - half[-1])
    left = ell[0] * (logd[..., 0] - half[0] + 1j * np.pi)
    total = (body + left + right) / (np.pi * 1j)
    g = np.exp(total)
    if return_tails:
        return OuterValue(g, (left + right) / (np.pi * 1j))
    return g


# ---------------------------------------------------------------------------
# circle spectral factorization


def circle_grid(M: int) -> np.ndarray:
    """Half-shifted angles ``2 pi (j + 1/2) / M``; avoids the point 1 of the circle."""
    return 2 * np.pi * (np.arange(M) + 0.5) / M


def circle_coeffs(samples: np.ndarray) -> np.ndarray:
    """Fourier coefficients on the half-shifted grid, FFT ordering, leading axis = samples."""
    M = samples.shape[0]
    k = np.fft.fftfreq(M, d=1.0 / M)
    shift = np.exp(-1j * np.pi * k / M).reshape((M,) + (1,) * (samples.ndim - 1))
    return np.fft.fft(samples, axis=0) * shift / M


def circle_synth(coeffs: np.ndarray) -> np.ndarray:
    M = coeffs.shape[0]
    k = np.fft.fftfreq(M, d=1.0 / M)
    shift = np.exp(1j * np.pi * k / M).reshape((M,) + (1,) * (coeffs.ndim - 1))
    return np.fft.ifft(coeffs * shift, axis=0) * M


@dataclass(frozen=True)
class SpectralFactor:
    """Outer factor ``g(zeta) = sum_k coeffs[k] zeta^k`` with ``|g|^2 = w``."""

    coeffs: np.ndarray
    residual: float
    tail: float

    def __call__(self, t, radius: float = 1.0):
        z = radius * np.exp(1j * np.asarray(t, dtype=float))
        return np.polynomial.polynomial.polyval(z, self.coeffs)


def _outer_samples(ws: np.ndarray):
    c = circle_coeffs(np.log(ws))
    freq = np.fft.fftfreq(len(ws), d=1.0 / len(ws))
    h = np.where(freq > 0, c, 0)
    h[0] = c[0] / 2
    h[len(ws) // 2] = c[len(ws) // 2] / 2
    return np.exp(circle_synth(h)), c


def outer_circle_samples(ws) -> np.ndarray:
    """Outer function with ``|g|^2 = w`` sampled on :func:`circle_grid` (``g(0) > 0``)."""
    ws = np.asarray(ws, dtype=float)
    if ws.ndim != 1 or len(ws) % 2 or np.any(~(ws > 0)):
        raise HardyError("need an even number of positive weight samples")
    return _outer_samples(ws)[0]


def spectral_factor_circle(w, N: int) -> SpectralFactor:
    """Scalar outer factor of a positive weight on the circle by the log method.

    ``w`` is a callable of the angle or an array of ``2N`` samples on
    :func:`circle_grid`.  The constant unitary factor is fixed by making the
    zeroth coefficient positive.  ``residual`` is ``max ||g|^2 - w|`` on the
    grid; ``tail`` the relative size of the last octave of log-coefficients.
    """
    M = 2 * int(N)
    if M < 4:
        raise HardyError("N must be at least 2")
    t = circle_grid(M)
    ws = np.asarray(w(t) if callable(w) else w, dtype=float)
    if ws.shape != (M,):
        raise HardyError(f"expected {M} samples, got shape {ws.shape}")
    if np.any(~(ws > 0)):
        raise HardyError("weight must be positive at every grid node")
    g, c = _outer_samples(ws)
    freq = np.fft.fftfreq(M, d=1.0 / M)
    gc = circle_coeffs(g)[: N + 1].copy()
    gc *= np.conj(gc[0]) / abs(gc[0])
    recon = np.polynomial.polynomial.polyval(np.exp(1j * t), gc)
    residual = float(np.max(np.abs(np.abs(recon) ** 2 - ws)))
    mag = np.abs(c[freq >= 0])
    tail = float(np.linalg.norm(mag[len(mag) // 2:]) / max(np.linalg.norm(mag), 1e-300))
    return SpectralFactor(gc, residual, tail)


def unimodular_part(sym: SymbolSpec, grid: SampleGrid | np.ndarray) -> np.ndarray:
    """Pointwise ``G(x)/|G(x)|`` for a scalar symbol."""
    if sym.r != 1:
        raise HardyError("unimodular_part is defined for scalar symbols")
    nodes = np.asarray(getattr(grid, "nodes", grid), dtype=float)
    g = np.asarray(det_eval(sym, nodes), dtype=complex)
    mod = np.abs(g)
    if np.any(~(mod > 0)):
        raise HardyError("symbol vanishes on the grid")
    return g / mod
