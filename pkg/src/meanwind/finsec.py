"""Finite sections of block Toeplitz matrices on the circle.

The symbol is pulled back to the circle with the fixed Cayley convention
(``zeta = exp(i t)``, ``x = -cot(t/2)``) and sampled on the half-shifted grid
``t_j = 2 pi (j + 1/2)/M``, which never touches ``zeta = 1`` (the image of
``x = +-inf``).  Symbols without limits at infinity pull back to functions
that are discontinuous at ``zeta = 1``; their Fourier tails decay slowly and
the aliasing gate refuses to draw conclusions from them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import FinsecError, FinsecInapplicable
from .hardy import circle_coeffs, circle_grid, outer_circle_samples
from .symbolkit import SymbolSpec, cayley_pullback

RESIDUAL_TOL = 1e-8
KERNEL_REL = 1e-6
NEHARI_MARGIN = 0.02


def _aliasing_residual(full: np.ndarray) -> float:
    """Relative energy of the last octave ``M/4 < |k| <= M/2`` of the raw FFT coefficients."""
    M = full.shape[0]
    k = np.abs(np.fft.fftfreq(M, d=1.0 / M))
    energy = np.sum(np.abs(full.reshape(M, -1)) ** 2, axis=1)
    total = energy.sum()
    if total == 0:
        return 0.0
    return float(np.sqrt(energy[k > M / 4].sum() / total))


@dataclass(frozen=True)
class CoeffTable:
    """Block Fourier coefficients ``G_k`` for ``k`` in ``[-K, K]`` (``coeffs[k + K]``)."""

    coeffs: np.ndarray
    K: int
    fft_size: int
    residual: float
    samples: np.ndarray = field(repr=False)

    @property
    def r(self) -> int:
        return self.coeffs.shape[1]

    def coeff(self, k: int) -> np.ndarray:
        if abs(k) > self.K:
            raise FinsecError(f"coefficient {k} outside table range [-{self.K}, {self.K}]")
        return self.coeffs[k + self.K]

    def adjoint(self) -> "CoeffTable":
        """Coefficients of ``G*``: ``conj(G_{-k})^T``."""
        c = np.conj(self.coeffs[::-1]).transpose(0, 2, 1)
        return CoeffTable(c, self.K, self.fft_size, self.residual, np.conj(self.samples).transpose(0, 2, 1))

    def shifted(self, m: int) -> "CoeffTable":
        """Coefficients of ``zeta^(-m) G``: ``G_{k+m}``, table shrinks to ``K - |m|``."""
        m = int(m)
        K = self.K - abs(m)
        if K < 1:
            raise FinsecError(f"shift {m} leaves no coefficients (K={self.K})")
        c = self.coeffs[self.K + m - K: self.K + m + K + 1]
        t = circle_grid(self.fft_size)
        s = self.samples * np.exp(-1j * m * t)[:, None, None]
        return CoeffTable(c, K, self.fft_size, self.residual, s)

    def rows(self):
        for k in range(-self.K, self.K + 1):
            for i in range(self.r):
                for j in range(self.r):
                    v = self.coeffs[k + self.K, i, j]
                    yield (k, i, j, float(v.real), float(v.imag))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "row", "col", "re", "im"])
            for k, i, j, re, im in self.rows():
                w.writerow([k, i, j, repr(re), repr(im)])


def coeffs_from_samples(samples, K: int) -> CoeffTable:
    """Coefficient table from samples on :func:`circle_grid`; shape ``(M,)`` or ``(M, r, r)``."""
    s = np.asarray(samples, dtype=complex)
    if s.ndim == 1:
        s = s[:, None, None]
    M = s.shape[0]
    if s.ndim != 3 or s.shape[1] != s.shape[2]:
        raise FinsecError("samples must have shape (M,) or (M, r, r)")
    if M < 8 * K or M & (M - 1):
        raise FinsecError(f"fft size {M} must be a power of two and at least 8K = {8 * K}")
    full = circle_coeffs(s)
    idx = np.arange(-K, K + 1) % M
    return CoeffTable(full[idx], int(K), M, _aliasing_residual(full), s)


def fourier_coeffs(sym: SymbolSpec, K: int, fft_size: int | None = None) -> CoeffTable:
    """Block Fourier coefficients of the circle pullback of ``sym``."""
    K = int(K)
    if K < 1:
        raise FinsecError("K must be at least 1")
    if fft_size is None:
        fft_size = 1 << max(10, int(np.ceil(np.log2(8 * K))))
    if fft_size < 8 * K or fft_size & (fft_size - 1):
        raise FinsecError(f"fft_size {fft_size} must be a power of two and at least 8K = {8 * K}")
    theta = circle_grid(fft_size) - np.pi  # zeta = -exp(i theta) = exp(i t)
    return coeffs_from_samples(cayley_pullback(sym, theta), K)


def toeplitz_section(coeffs: CoeffTable, n: int) -> np.ndarray:
    """``rn x rn`` matrix with block ``(j, l)`` equal to ``G_{j-l}``."""
    n = int(n)
    if not 1 <= n <= coeffs.K:
        raise FinsecError(f"section size {n} needs 1 <= n <= K = {coeffs.K}")
    r = coeffs.r
    d = np.arange(n)[:, None] - np.arange(n)[None, :]
    blocks = coeffs.coeffs[d + coeffs.K]  # (n, n, r, r)
    return blocks.transpose(0, 2, 1, 3).reshape(n * r, n * r)


@dataclass(frozen=True)
class SVDReport:
    sigma_min: float
    sigma_max: float
    kernel_dim: int
    cokernel_dim: int
    threshold: float
    stable: bool
    singular_values: np.ndarray = field(repr=False)


def svd_report(section: np.ndarray, threshold: float | None = None, adjoint: np.ndarray | None = None) -> SVDReport:
    """Numerical kernel and cokernel dimensions of a section.

    ``threshold`` defaults to ``1e-6 * sigma_max``.  The cokernel is read off
    the adjoint section (built from the adjoint coefficients when given).
    ``stable`` means the kernel count is the same for thresholds one decade
    either side.
    """
    s = linalg.svdvals(section)
    smax = float(s[0]) if s.size else 0.0
    thr = KERNEL_REL * smax if threshold is None else float(threshold)
    sa = linalg.svdvals(section.conj().T if adjoint is None else adjoint)
    ker = int(np.sum(s < thr))
    coker = int(np.sum(sa < thr))
    stable = all(int(np.sum(s < thr * f)) == ker for f in (0.1, 10.0))
    return SVDReport(float(s[-1]), smax, ker, coker, thr, stable, s)


@dataclass(frozen=True)
class SectionRecord:
    n: int
    sigma_min: float
    sigma_max: float
    kernel_dim: int
    cokernel_dim: int
    threshold: float
    stable: bool

    @property
    def index(self) -> int:
        """``dim ker - dim coker`` of the square truncation (always 0: a finite-section artifact)."""
        return self.kernel_dim - self.cokernel_dim


@dataclass(frozen=True)
class FiniteSectionReport:
    records: tuple[SectionRecord, ...]

    def rows(self):
        for rec in self.records:
            yield (rec.n, rec.sigma_min, rec.kernel_dim, rec.cokernel_dim)


def finite_sections(coeffs: CoeffTable, n_list, threshold_rel: float = KERNEL_REL) -> FiniteSectionReport:
    adj = coeffs.adjoint()
    recs = []
    for n in n_list:
        A = toeplitz_section(coeffs, n)
        s = linalg.svdvals(A)
        rep = svd_report(A, threshold_rel * float(s[0]), toeplitz_section(adj, n))
        recs.append(SectionRecord(int(n), rep.sigma_min, rep.sigma_max, rep.kernel_dim, rep.cokernel_dim,
                                  rep.threshold, rep.stable))
    return FiniteSectionReport(tuple(recs))


@dataclass(frozen=True)
class IndexEstimate:
    """Operator index ``-wind det G`` with an independent section-based cross-check.

    Route ``circle-winding`` counts the turns of ``det`` over the circle
    samples.  Route ``shift-scan`` looks for the shift ``m`` for which the
    sections of ``zeta^(-m) G`` have no small singular values; the index is
    then ``-m``.  ``cross_check`` is None when the scan found no such shift
    (matrix symbols with unequal partial indices).
    """

    index: int
    route: str
    winding: int
    winding_raw: float
    cross_check: int | None
    consistent: bool
    sections: FiniteSectionReport
    residual: float


def circle_winding(coeffs: CoeffTable) -> float:
    """Raw winding of ``det`` over the circle samples, counterclockwise in ``t``."""
    d = np.linalg.det(coeffs.samples) if coeffs.r > 1 else coeffs.samples[:, 0, 0]
    if np.any(~(np.abs(d) > 0)):
        raise FinsecError("det of the pulled-back symbol vanishes on the grid")
    steps = np.angle(np.append(d[1:], d[0]) / d)
    if np.any(np.abs(steps) >= np.pi / 2):
        raise FinsecError("det phase under-resolved on the circle grid; raise fft_size")
    return float(np.sum(steps) / (2 * np.pi))


def index_estimate(coeffs: CoeffTable, n_list, residual_tol: float = RESIDUAL_TOL, k_max: int = 8,
                   threshold_rel: float = KERNEL_REL) -> IndexEstimate:
    """Operator index of ``T_G`` for symbols continuous on the circle."""
    n_list = sorted(int(n) for n in n_list)
    if coeffs.residual > residual_tol:
        raise FinsecInapplicable(
            f"finite-section oracle not applicable: aliasing residual {coeffs.residual:.3g} > {residual_tol:g} "
            "(pulled-back symbol is not continuous at zeta = 1)"
        )
    raw = circle_winding(coeffs)
    wind = int(np.round(raw))
    sections = finite_sections(coeffs, n_list, threshold_rel)
    n = n_list[-1]
    cross = None
    for m in sorted(range(-k_max, k_max + 1), key=lambda k: (abs(k), k)):
        if coeffs.K - abs(m) < n:
            continue
        A = toeplitz_section(coeffs.shifted(m), n)
        rep = svd_report(A, threshold_rel * float(linalg.svdvals(A)[0]))
        if rep.kernel_dim == 0 and rep.stable:
            cross = -m
            break
    return IndexEstimate(-wind, "circle-winding", wind, raw, cross, cross is None or cross == -wind,
                         sections, coeffs.residual)


@dataclass(frozen=True)
class NehariProbe:
    """Largest singular values of nested Hankel sections of ``U``.

    They increase with ``n`` towards ``||H_U|| = dist(U, H^inf)``, so the
    last one is a lower bound for the distance.
    """

    n_list: tuple[int, ...]
    hankel_sigma: np.ndarray
    distance_lower_bound: float
    verdict: str  # "below", "not-below" or "inconclusive"
    margin: float
    residual: float


def _hankel(coeffs: CoeffTable, n: int) -> np.ndarray:
    r = coeffs.r
    s = np.arange(n)[:, None] + np.arange(n)[None, :] + 1
    blocks = coeffs.coeffs[coeffs.K - s]  # U_{-(j+l+1)}
    return blocks.transpose(0, 2, 1, 3).reshape(n * r, n * r)


def nehari_distance(U, K: int, n_list, margin: float = NEHARI_MARGIN, fft_size: int | None = None,
                    residual_tol: float = RESIDUAL_TOL) -> NehariProbe:
    """Hankel-section estimate of ``dist(U, H^inf)`` for a unimodular circle function.

    ``U`` is a :class:`SymbolSpec` (pulled back), a callable of the angle
    ``t`` or an array of samples on :func:`circle_grid`.
    """
    n_list = tuple(sorted(int(n) for n in n_list))
    if 2 * n_list[-1] - 1 > K:
        raise FinsecError(f"Hankel section {n_list[-1]} needs K >= {2 * n_list[-1] - 1}")
    if isinstance(U, SymbolSpec):
        ct = fourier_coeffs(U, K, fft_size)
    else:
        if callable(U):
            M = fft_size or 1 << max(10, int(np.ceil(np.log2(8 * K))))
            U = U(circle_grid(M))
        ct = coeffs_from_samples(U, K)
    d = np.linalg.det(ct.samples) if ct.r > 1 else ct.samples[:, 0, 0]
    if np.max(np.abs(np.abs(d) - 1)) > 1e-8:
        raise FinsecError("U must be unimodular: |det U| deviates from 1 by more than 1e-8")
    sig = np.array([linalg.svdvals(_hankel(ct, n))[0] for n in n_list])
    if np.any(np.diff(sig) < -1e-12 * max(1.0, float(sig.max()))):
        raise AssertionError("nested Hankel section norms must be nondecreasing")
    dist = float(sig[-1])
    if ct.residual > residual_tol:
        verdict = "inconclusive"
    elif dist < 1 - margin:
        verdict = "below"
    else:
        verdict = "not-below"
    return NehariProbe(n_list, sig, dist, verdict, float(margin), ct.residual)


@dataclass(frozen=True)
class PhiNProbe:
    """Left-invertibility search over ``phi^n G``, ``n = 0..N``.

    ``certificate`` is "Phi+ consistent (at n = n0)" on success and
    "no Phi+ certificate up to N" otherwise, which refutes nothing.
    """

    distances: tuple[float, ...]
    verdicts: tuple[str, ...]
    success_n: int | None
    certificate: str
    residual: float
    hankel_sigma: tuple[float, ...] = ()  # per-n values of the last probed shift


def phi_n_probe(sym: SymbolSpec, N: int, K: int, n_list, margin: float = NEHARI_MARGIN,
                fft_size: int | None = None, residual_tol: float = RESIDUAL_TOL) -> PhiNProbe:
    """Scalar probe of ``T_G in Phi_+`` through Nehari distances of ``zeta^n G / g_e``.

    ``g_e`` is the outer function with ``|g_e| = |G|`` on the circle, so
    ``T_G = T_U T_{g_e}`` with ``T_{g_e}`` invertible and ``U = G/g_e``
    unimodular.
    """
    if sym.r != 1:
        raise FinsecError("phi_n_probe handles scalar symbols; matrix spectral factorization is out of scope")
    M = fft_size or 1 << max(10, int(np.ceil(np.log2(8 * K))))
    t = circle_grid(M)
    g = cayley_pullback(sym, t - np.pi)[:, 0, 0]
    mod = np.abs(g)
    if not np.all(mod > 0):
        raise FinsecError("symbol vanishes on the circle grid")
    U0 = g / outer_circle_samples(mod**2)
    U0 = U0 / np.abs(U0)  # remove rounding-level modulus drift
    dists, verdicts, success = [], [], None
    residual = 0.0
    sig = ()
    for n in range(int(N) + 1):
        probe = nehari_distance(U0 * np.exp(1j * n * t), K, n_list, margin, residual_tol=residual_tol)
        dists.append(probe.distance_lower_bound)
        verdicts.append(probe.verdict)
        residual = max(residual, probe.residual)
        sig = tuple(float(v) for v in probe.hankel_sigma)
        if probe.verdict == "below":
            success = n
            break
    if success is not None:
        cert = f"Phi+ consistent (at n = {success})"
    else:
        cert = f"no Phi+ certificate up to N = {int(N)}"
    return PhiNProbe(tuple(dists), tuple(verdicts), success, cert, residual, sig)
