import numpy as np
import pytest
from scipy import integrate

from meanwind.argtrack import unwrap_arg, winding_number
from meanwind.exceptions import FinsecError, FinsecInapplicable
from meanwind.finsec import (
    circle_winding,
    coeffs_from_samples,
    finite_sections,
    fourier_coeffs,
    index_estimate,
    nehari_distance,
    phi_n_probe,
    svd_report,
    toeplitz_section,
)
from meanwind.hardy import circle_grid
from meanwind.symbolkit import SampleGrid, cayley_pullback, parse_symbol, preset

N_LIST = [2, 4, 8, 16, 32]


# coefficients ----------------------------------------------------------------------

def test_identity_coefficients():
    c = fourier_coeffs(preset("identity()"), 16)
    assert np.array_equal(c.coeff(0), np.eye(1))
    assert np.max(np.abs(np.delete(c.coeffs, 16, axis=0))) == 0


@pytest.mark.parametrize("m", [-3, -1, 1, 2])
def test_phi_power_has_single_coefficient(m):
    c = fourier_coeffs(parse_symbol(f"phi(x)^{m}"), 32)
    vals = np.abs(c.coeffs[:, 0, 0])
    assert vals[m + 32] == pytest.approx(1, abs=1e-13)
    assert np.max(np.delete(vals, m + 32)) < 1e-13
    assert c.residual < 1e-12


def test_discontinuous_pullback_is_flagged():
    c = fourier_coeffs(preset("whirl(k=2,alpha=0.5)"), 64)
    assert c.residual > 1e-3
    with pytest.raises(FinsecInapplicable):
        index_estimate(c, N_LIST)


def test_coefficients_against_quadrature():
    sym = preset("rational(m=1)")
    c = fourier_coeffs(sym, 16)
    g = lambda t: cayley_pullback(sym, t - np.pi)[0, 0]
    for k in (-2, 0, 1, 2, 5):
        re = integrate.quad(lambda t: (g(t) * np.exp(-1j * k * t)).real, 0, 2 * np.pi, epsabs=1e-13, limit=200)[0]
        im = integrate.quad(lambda t: (g(t) * np.exp(-1j * k * t)).imag, 0, 2 * np.pi, epsabs=1e-13, limit=200)[0]
        assert abs(c.coeff(k)[0, 0] - (re + 1j * im) / (2 * np.pi)) < 1e-8


def test_coefficient_table_validation(tmp_path):
    with pytest.raises(FinsecError):
        fourier_coeffs(preset("identity()"), 0)
    with pytest.raises(FinsecError):
        fourier_coeffs(preset("identity()"), 16, fft_size=100)
    with pytest.raises(FinsecError):
        coeffs_from_samples(np.ones(64), 16)
    c = fourier_coeffs(preset("identity()"), 4)
    with pytest.raises(FinsecError):
        c.coeff(5)
    p = tmp_path / "coeffs.csv"
    c.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "k,row,col,re,im" and len(lines) == 1 + 9


# sections ------------------------------------------------------------------------------

def test_section_of_phi_squared_is_shift():
    A = toeplitz_section(fourier_coeffs(parse_symbol("phi(x)^2"), 16), 6)
    assert np.allclose(A, np.eye(6, k=-2), atol=1e-13)


def test_block_section_layout():
    c = fourier_coeffs(preset("diag(rational(m=1); rational(m=-1))"), 16)
    A = toeplitz_section(c, 5)
    assert A.shape == (10, 10)
    # block (j, l) is G_{j-l}
    assert np.allclose(A[4:6, 0:2], c.coeff(2))
    assert np.allclose(A[0:2, 6:8], c.coeff(-3))
    with pytest.raises(FinsecError):
        toeplitz_section(c, 17)


def test_section_of_analytic_product_is_product_of_sections():
    # lower-triangular sections multiply exactly when both symbols are analytic
    f, g = parse_symbol("phi(x)"), preset("rational(m=2)")
    fg = parse_symbol(f"({f.to_text()})*({g.to_text()})")
    n = 12
    A = toeplitz_section(fourier_coeffs(fg, 32), n)
    B = toeplitz_section(fourier_coeffs(f, 32), n) @ toeplitz_section(fourier_coeffs(g, 32), n)
    assert np.allclose(A, B, atol=1e-12)


def test_svd_report_dimensions():
    A = np.diag([3.0, 2.0, 1.0, 0.0, 0.0])
    rep = svd_report(A)
    assert (rep.kernel_dim, rep.cokernel_dim) == (2, 2) and rep.stable
    assert rep.sigma_max == 3.0 and rep.sigma_min == 0.0
    shift = np.eye(6, k=-1)
    rep = svd_report(shift)
    assert (rep.kernel_dim, rep.cokernel_dim) == (1, 1)
    rep = svd_report(np.diag([1.0, 1e-6]), threshold=1e-6)
    assert rep.kernel_dim == 0 and not rep.stable


def test_kernel_dims_stabilize():
    c = fourier_coeffs(preset("rational(m=-2)"), 64)
    rep = finite_sections(c, [16, 24, 32, 48])
    assert [r.kernel_dim for r in rep.records] == [2, 2, 2, 2]
    assert all(r.index == 0 for r in rep.records)
    assert len(list(rep.rows())) == 4


def test_dims_invariant_under_unimodular_constant():
    base = preset("rational(m=-2)")
    rot = parse_symbol(f"exp(i*0.7)*({base.to_text()})")
    a = finite_sections(fourier_coeffs(base, 64), N_LIST)
    b = finite_sections(fourier_coeffs(rot, 64), N_LIST)
    assert [(r.kernel_dim, r.cokernel_dim) for r in a.records] == [(r.kernel_dim, r.cokernel_dim) for r in b.records]
    assert np.allclose([r.sigma_min for r in a.records], [r.sigma_min for r in b.records], atol=1e-12)


# index -------------------------------------------------------------------------------------

@pytest.mark.parametrize("spec,index", [
    ("identity()", 0),
    ("rational(m=2)", -2),
    ("rational(m=-3)", 3),
    ("diag(rational(m=1); rational(m=2))", -3),
    ("diag(rational(m=1); rational(m=-1))", 0),
])
def test_index_examples(spec, index):
    est = index_estimate(fourier_coeffs(preset(spec), 64), N_LIST)
    assert est.index == index and est.route == "circle-winding"
    assert abs(est.winding_raw + index) < 1e-9
    assert est.consistent


def test_unequal_partial_indices_have_no_shift_cross_check():
    est = index_estimate(fourier_coeffs(preset("diag(rational(m=1); rational(m=-1))"), 64), N_LIST)
    assert est.cross_check is None


@pytest.mark.parametrize("spec", ["rational(m=-3)", "rational(m=1)", "identity()", "diag(rational(m=1); rational(m=2))"])
def test_index_agrees_with_line_winding(spec):
    sym = preset(spec)
    line = winding_number(unwrap_arg(sym, SampleGrid.symmetric(2001, 1e4))).value
    assert index_estimate(fourier_coeffs(sym, 64), N_LIST).index == -line


def test_circle_winding_rejects_vanishing_det():
    t = circle_grid(64)
    c = coeffs_from_samples(np.cos(t) + 0j, 8)
    with pytest.raises(FinsecError):
        circle_winding(c)


# Nehari distance --------------------------------------------------------------------------------

def test_nehari_examples():
    up = nehari_distance(lambda t: np.exp(1j * t), 64, N_LIST)
    assert up.distance_lower_bound < 1e-12 and up.verdict == "below"
    down = nehari_distance(lambda t: np.exp(-1j * t), 64, N_LIST)
    assert down.distance_lower_bound == pytest.approx(1, abs=1e-12) and down.verdict == "not-below"


def test_nehari_conjugate_blaschke_factor():
    # the Hankel matrix is rank one with entries (1 - a^2) a^(j+l), so sigma_n = 1 - a^(2n)
    a = 0.5
    probe = nehari_distance(lambda t: np.conj((np.exp(1j * t) - a) / (1 - a * np.exp(1j * t))), 64, N_LIST)
    assert np.allclose(probe.hankel_sigma, 1 - a ** (2 * np.array(N_LIST)), atol=1e-12)
    assert np.all(np.diff(probe.hankel_sigma) >= 0)
    assert probe.verdict == "not-below"


def test_nehari_validation():
    with pytest.raises(FinsecError, match="needs K"):
        nehari_distance(lambda t: np.exp(1j * t), 16, N_LIST)
    with pytest.raises(FinsecError, match="unimodular"):
        nehari_distance(lambda t: 2 + np.cos(t), 64, N_LIST)


def test_nehari_inconclusive_for_discontinuous_symbol():
    probe = nehari_distance(preset("whirl(k=2,alpha=0.5)"), 64, N_LIST)
    assert probe.verdict == "inconclusive"


# phi^n probe ------------------------------------------------------------------------------------

@pytest.mark.parametrize("text,n0", [("1", 0), ("phi(x)^-1", 1), ("phi(x)^2", 0), ("exp(i*0.3)*phi(x)^-3", 3)])
def test_phi_n_probe_examples(text, n0):
    p = phi_n_probe(parse_symbol(text), 4, 64, N_LIST)
    assert p.success_n == n0
    assert p.certificate == f"Phi+ consistent (at n = {n0})"
    assert len(p.distances) == n0 + 1


def test_phi_n_probe_gives_up_honestly():
    p = phi_n_probe(parse_symbol("phi(x)^-3"), 2, 64, N_LIST)
    assert p.success_n is None
    assert p.certificate == "no Phi+ certificate up to N = 2"
    assert all(v == "not-below" for v in p.verdicts)


def test_phi_n_probe_with_nonunimodular_symbol():
    # the outer correction removes |G|; only the winding of G matters
    p = phi_n_probe(preset("rational(m=-1)"), 3, 64, N_LIST)
    assert p.success_n == 1


def test_phi_n_probe_scalar_only():
    with pytest.raises(FinsecError):
        phi_n_probe(preset("diag(rational(m=1); rational(m=2))"), 2, 64, N_LIST)
