"""Acceptance gate: one test group per criterion, tolerances as stated.

A summary line per criterion is printed at the end of the session.
"""

import time

import numpy as np
import pytest
from scipy import integrate

from meanwind.argtrack import ArgumentTrace, unwrap_arg, winding_number
from meanwind.bmo import monotone_split, oscillation_profile
from meanwind.config import STEP3, RunConfig
from meanwind.finsec import fourier_coeffs, index_estimate, nehari_distance
from meanwind.gallery import run_gallery
from meanwind.hardy import TestFunction, eta_alpha, h1_norm, hilbert_step, scale_translate, spectral_factor_circle
from meanwind.symbolkit import SampleGrid, preset
from meanwind.winding import beta_lower_bound, default_T_grid, theorem2_check, w_alpha

T_MAX = 1e4


# 1. whirl exactness -----------------------------------------------------------

@pytest.mark.parametrize("k,alpha", [(2, 0.5), (-3, 1.0), (5, 1.0)])
def test_criterion_01_whirl_exactness(k, alpha):
    t0 = time.perf_counter()
    sym = preset(f"whirl(k={k},alpha={alpha})")
    trace = unwrap_arg(sym, SampleGrid.symmetric(4001, 2 * T_MAX + 1, max_spacing=0.5))
    est = w_alpha(trace, alpha, default_T_grid(T_MAX))
    elapsed = time.perf_counter() - t0
    print(f"whirl k={k} alpha={alpha}: upper={est.upper!r} lower={est.lower!r} nodes={len(trace)} {elapsed:.2f}s")
    assert len(trace) <= 1_000_000
    assert elapsed <= 60
    assert abs(est.upper - k) <= 0.05 * abs(k)
    assert abs(est.lower - k) <= 0.05 * abs(k)


# 2. linear-phase exactness ------------------------------------------------------

@pytest.mark.parametrize("kappa", [1.0, -2.5, 0.3])
def test_criterion_02_linear_phase_exact(kappa):
    x = np.linspace(-3e3, 3e3, 60001)
    trace = ArgumentTrace.from_function(lambda t: kappa * t, x)
    T = default_T_grid(1e3, 3, 10)
    est = w_alpha(trace, 1.0, T)
    assert np.max(np.abs(est.values - kappa)) <= 1e-9


# 3. SAP relations ---------------------------------------------------------------

def test_criterion_03_sap_relations():
    trace = unwrap_arg(preset("sap(kminus=-1,kplus=2)"), SampleGrid.symmetric(4001, 2 * T_MAX + 1, max_spacing=0.5))
    est = w_alpha(trace, 1.0, default_T_grid(T_MAX))
    assert abs(est.lower - (-1)) <= 0.02
    assert abs(est.upper - 2) <= 0.02 * 2
    assert abs(est.tilde_upper - 0.5) <= 0.02 * 0.5
    assert abs(est.tilde_lower - 0.5) <= 0.02 * 0.5
    beta = beta_lower_bound(trace, 1, default_T_grid(T_MAX))
    assert abs(beta.value - max(-1, 2)) <= 0.02 * 2


# 4. index formula ---------------------------------------------------------------

def test_criterion_04_index_formula():
    t0 = time.perf_counter()
    for m in range(-3, 4):
        sym = preset(f"rational(m={m})")
        ie = index_estimate(fourier_coeffs(sym, 136), [8, 16, 32, 64])
        wn = winding_number(unwrap_arg(sym, SampleGrid.symmetric(2001, 1e4)))
        assert ie.index == -m
        assert ie.cross_check == -m
        assert wn.value == m
    assert time.perf_counter() - t0 <= 10


# 5. H1 scaling law --------------------------------------------------------------

@pytest.mark.parametrize("eta", [eta_alpha(0.5), eta_alpha(1.0), STEP3], ids=lambda e: e.name)
def test_criterion_05_h1_scaling(eta):
    base = h1_norm(eta).value
    for T in (2.0, 10.0, 100.0):
        for y in (0.0, 3.7, -50.0):
            ratio = h1_norm(scale_translate(eta, T, y)).value / base
            assert T * (1 - 1e-5) <= ratio <= T * (1 + 1e-5)


# 6. Hilbert transform oracle ------------------------------------------------------

def _pv_hilbert(eta: TestFunction, x: float) -> float:
    # (1/pi) PV int eta(t)/(x - t) dt = -(1/pi) PV int eta(t)/(t - x) dt
    total = 0.0
    for lo, hi, v in zip(eta.a[:-1], eta.a[1:], eta.v):
        if lo < x < hi:
            val = integrate.quad(lambda t: 1.0, lo, hi, weight="cauchy", wvar=x)[0]
        else:
            val = integrate.quad(lambda t: 1.0 / (t - x), lo, hi, epsabs=1e-13, epsrel=1e-13)[0]
        total += v * val
    return -total / np.pi


@pytest.mark.parametrize("eta", [eta_alpha(0.5), eta_alpha(1.0), STEP3], ids=lambda e: e.name)
def test_criterion_06_hilbert_oracle(eta):
    rng = np.random.default_rng(20261015)
    span = eta.a[-1] - eta.a[0]
    xs = rng.uniform(eta.a[0] - span, eta.a[-1] + span, 100)
    xs = xs[np.min(np.abs(xs[:, None] - eta.a[None, :]), axis=1) > 1e-3]
    closed = hilbert_step(eta, xs)
    oracle = np.array([_pv_hilbert(eta, x) for x in xs])
    assert np.max(np.abs(closed - oracle)) <= 1e-8


# 7. Nehari landmarks --------------------------------------------------------------

def test_criterion_07_nehari_landmarks():
    n_list = [2, 4, 8, 16, 32]
    analytic = nehari_distance(lambda t: np.exp(1j * t), 64, n_list)
    conj = nehari_distance(lambda t: np.exp(-1j * t), 64, n_list)
    assert analytic.distance_lower_bound <= 1e-10
    assert abs(conj.distance_lower_bound - 1) <= 1e-6
    for p in (analytic, conj):
        assert np.all(np.diff(p.hankel_sigma) >= -1e-12)


# 8. spectral factorization --------------------------------------------------------

@pytest.mark.parametrize("name,w", [
    ("const4", lambda t: 4.0 + 0 * t),
    ("poly", lambda t: np.abs(2 + np.exp(1j * t)) ** 2),
    ("expcos", lambda t: np.exp(np.cos(t))),
])
def test_criterion_08_spectral_factorization(name, w):
    sf = spectral_factor_circle(w, 64)
    assert sf.residual <= 1e-6
    if name == "poly":
        expect = np.zeros(len(sf.coeffs))
        expect[:2] = [2, 1]
        assert np.max(np.abs(sf.coeffs - expect)) <= 1e-8


# 9. BMO diagnostics ---------------------------------------------------------------

def test_criterion_09_bmo_diagnostics():
    x = np.linspace(-4096, 4096, 400001)
    sin_p = oscillation_profile(ArgumentTrace.from_function(np.sin, x))
    assert np.all(sin_p.oscillation <= 2)
    lin_p = oscillation_profile(ArgumentTrace.from_function(lambda t: t, x))
    assert np.max(np.abs(lin_p.oscillation - lin_p.scales / 4)) <= 1e-9
    whirl_p = oscillation_profile(ArgumentTrace.from_function(lambda t: 2 * np.sign(t) * np.abs(t) ** 0.5, x))
    assert abs(whirl_p.fit.slope - 0.5) <= 0.05
    for f, direction in [(lambda t: t, "+"), (lambda t: -t**3, "-"), (lambda t: np.sign(t) * np.abs(t) ** 0.5, "+")]:
        u, _ = monotone_split(ArgumentTrace.from_function(f, x), direction)
        assert np.max(np.abs(u.values)) <= 1e-9


# 10. growth certificates -----------------------------------------------------------

def _certificates(spec):
    trace = unwrap_arg(preset(spec), SampleGrid.symmetric(2001, 401, max_spacing=0.5))
    chk = theorem2_check(trace, [eta_alpha(1.0), eta_alpha(0.5)], default_T_grid(100, 2))
    return chk


def test_criterion_10_certificates():
    neg = _certificates("whirl(k=-1,alpha=2)")
    pos = _certificates("whirl(k=1,alpha=2)")
    ident = _certificates("identity()")
    assert neg.phi_plus == "certificate" and neg.phi_minus == "no-obstruction"
    assert pos.phi_minus == "certificate" and pos.phi_plus == "no-obstruction"
    assert ident.phi_plus == "no-obstruction" and ident.phi_minus == "no-obstruction"
    for c in neg.checks:
        last = c.report.T_grid >= c.report.T_grid[-1] / 10 * (1 - 1e-12)
        assert np.all(np.diff(c.phi_plus.extremes[last]) < 0)


# 11. determinism ------------------------------------------------------------------

def _csv_bodies(root):
    out = {}
    for p in sorted(root.rglob("*.csv")):
        out[str(p.relative_to(root))] = p.read_bytes()
    return out


def test_criterion_11_gallery_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    ra = run_gallery(str(a), RunConfig())
    rb = run_gallery(str(b), RunConfig())
    assert ra.exit_code == 0 and rb.exit_code == 0
    ca, cb = _csv_bodies(a), _csv_bodies(b)
    assert ca and ca.keys() == cb.keys()
    assert all(ca[k] == cb[k] for k in ca)
