import numpy as np
import pytest
from hypothesis import given, strategies as st

from meanwind.argtrack import ArgumentTrace, unwrap_arg
from meanwind.config import STEP3
from meanwind.exceptions import WindingError
from meanwind.hardy import eta_alpha, h1_norm
from meanwind.symbolkit import SampleGrid, preset
from meanwind.winding import (
    beta_lower_bound,
    default_T_grid,
    default_etas,
    generalized_winding,
    mean_winding,
    pairing,
    required_range,
    theorem2_check,
    w_alpha,
)

ETA1 = eta_alpha(1.0)


def _trace(spec, hw, count=2001):
    return unwrap_arg(preset(spec), SampleGrid.symmetric(count, hw, max_spacing=0.5))


def _synthetic(f, hw=400.0, n=8001):
    return ArgumentTrace.from_function(f, np.linspace(-hw, hw, n))


@st.composite
def bounded_traces(draw):
    coeffs = draw(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
    freqs = draw(st.lists(st.floats(0.05, 3), min_size=3, max_size=3))
    slope = draw(st.floats(-3, 3))
    f = lambda x: slope * x + sum(c * np.sin(w * x + j) for j, (c, w) in enumerate(zip(coeffs, freqs)))
    return _synthetic(f)


# pairing -----------------------------------------------------------------------------

def test_pairing_of_constant_trace_is_zero():
    tr = _trace("identity()", 100)
    for eta in default_etas():
        for T, y in [(1, 0), (7.5, 12), (20, -30)]:
            assert pairing(tr, eta, T, y) == 0


def test_pairing_linear_phase_equals_T():
    tr = _synthetic(lambda x: x)
    for T in (1.0, 10.0, 150.0):
        assert pairing(tr, ETA1, T) == pytest.approx(T, rel=1e-12)


@given(st.floats(0.5, 50), st.floats(-100, 100))
def test_pairing_bounded_by_l1_times_sup(T, y):
    tr = _synthetic(lambda x: 3 * np.sin(x) * np.cos(0.3 * x))
    assert abs(pairing(tr, STEP3, T, y)) <= 3 * STEP3.l1_norm() + 1e-12


def test_pairing_needs_support_inside_trace():
    tr = _synthetic(lambda x: x, hw=10)
    with pytest.raises(WindingError, match="needs the trace"):
        pairing(tr, ETA1, 20.0)
    lo, hi = required_range(STEP3, [1, 10], [-1, 1])
    assert (lo, hi) == (-30.0, 40.0)


@given(bounded_traces(), st.integers(-5, 5))
def test_pairing_branch_invariance(tr, n):
    shifted = ArgumentTrace(tr.nodes, tr.values + 2 * np.pi * n)
    T = default_T_grid(100, 1, 5)
    for eta in (ETA1, STEP3):
        a = mean_winding(tr, eta, T).values
        b = mean_winding(shifted, eta, T).values
        assert np.max(np.abs(a - b)) <= 1e-9


# mean winding reports ------------------------------------------------------------------

@given(bounded_traces())
def test_chain_and_alpha_form_equivalence(tr):
    T = default_T_grid(100, 1, 5)
    rep = mean_winding(tr, ETA1, T)
    assert rep.lower <= rep.tilde_lower <= rep.tilde_upper <= rep.upper
    for alpha in (0.5, 1.0, 2.0):
        g = generalized_winding(tr, eta_alpha(alpha), alpha, T)
        w = w_alpha(tr, alpha, T)
        assert np.max(np.abs(g.values - w.values)) <= 1e-9 * max(1.0, np.max(np.abs(w.values)))


@given(bounded_traces())
def test_sign_equivariance(tr):
    T = default_T_grid(100, 1, 5)
    neg = ArgumentTrace(tr.nodes, -tr.values)
    a, b = w_alpha(tr, 1.0, T), w_alpha(neg, 1.0, T)
    assert b.upper == -a.lower and b.lower == -a.upper
    ra, rb = mean_winding(tr, STEP3, T), mean_winding(neg, STEP3, T)
    assert rb.upper == -ra.lower and rb.tilde_upper == -ra.tilde_lower


def test_identity_all_zero():
    tr = _trace("identity()", 2.1e3)
    rep = mean_winding(tr, ETA1, default_T_grid(1e3))
    assert (rep.upper, rep.lower, rep.tilde_upper, rep.tilde_lower) == (0, 0, 0, 0)


@pytest.mark.parametrize("jump", [0.5, 1.0, 2.0, -1.5])
def test_limit_symbol_formulas(jump):
    # arg runs from -jump*pi/2 to +jump*pi/2; K = L = 1 for eta_1
    tr = _trace(f"limit(jump={jump})", 2.1e4)
    rep = mean_winding(tr, ETA1, default_T_grid(1e4))
    delta = jump * np.pi
    assert rep.tilde_upper == pytest.approx(delta, abs=0.02)
    assert rep.tilde_lower == pytest.approx(delta, abs=0.02)
    assert rep.upper == pytest.approx(max(delta, 0), abs=0.02)
    assert rep.lower == pytest.approx(min(delta, 0), abs=0.02)


def test_generalized_vanishes_for_bounded_argument():
    # |arg| <= pi/4 and ||eta_alpha||_1 = 1 + alpha, so every value is O(T^-alpha)
    tr = _trace("limit(jump=0.5)", 2.1e4)
    for alpha in (0.25, 1.0):
        g = generalized_winding(tr, eta_alpha(alpha), alpha, default_T_grid(1e4))
        bound = (1 + alpha) * np.pi / 4 * g.T_grid ** -alpha
        assert np.all(np.abs(g.values) <= bound[:, None] * (1 + 1e-9))


def test_generalized_with_rho_matches_alpha():
    tr = _synthetic(lambda x: 2 * np.sign(x) * np.sqrt(np.abs(x)))
    T = default_T_grid(100, 1, 5)
    a = generalized_winding(tr, ETA1, 0.5, T)
    r = generalized_winding(tr, ETA1, T_grid=T, rho=lambda t: t**1.5)
    assert np.allclose(a.values, r.values, rtol=1e-12)
    assert r.normalization == "1/rho(T)"
    with pytest.raises(WindingError):
        generalized_winding(tr, ETA1, -1.0, T)


def test_whirl_generalized_estimates():
    tr = _trace("whirl(k=2,alpha=0.5)", 2.1e4)
    g = generalized_winding(tr, eta_alpha(0.5), 0.5, default_T_grid(1e4))
    assert g.tilde_upper == pytest.approx(2, rel=0.05)
    assert g.upper == pytest.approx(2, rel=0.05)
    w = w_alpha(tr, 1.0, default_T_grid(1e4))
    assert abs(w.upper) < 0.1


@pytest.mark.parametrize("k", [-3, 5])
def test_linear_whirl_w1(k):
    tr = _trace(f"whirl(k={k},alpha=1)", 2.1e4)
    w = w_alpha(tr, 1.0, default_T_grid(1e4))
    assert w.upper == pytest.approx(k, rel=1e-6)
    assert w.lower == pytest.approx(k, rel=1e-6)


def test_report_rows_and_estimates():
    tr = _synthetic(lambda x: x)
    T = default_T_grid(100, 1, 3)
    rep = mean_winding(tr, ETA1, T, y_rel=[-0.5, 0.5])
    rows = list(rep.rows())
    assert len(rows) == len(T) * 3
    eta_id, t, y, p, h1, ratio = rows[0]
    assert eta_id == "eta_1"
    assert h1 == pytest.approx(t * h1_norm(ETA1).value)
    assert ratio == pytest.approx(p / h1_norm(ETA1).value)
    est = rep.estimates()
    assert est["y_count"] == 3 and est["normalization"] == "1/T"


def test_absolute_y_grid():
    tr = _synthetic(lambda x: x)
    rep = mean_winding(tr, ETA1, [10.0, 20.0], y_grid=[-50.0, 50.0])
    assert np.array_equal(rep.y_grid[0], [-50.0, 0.0, 50.0])


def test_bad_T_grid():
    tr = _synthetic(lambda x: x)
    with pytest.raises(WindingError):
        mean_winding(tr, ETA1, [10.0, 5.0])
    with pytest.raises(WindingError):
        default_T_grid(0)


# beta bound ------------------------------------------------------------------------------------

def test_beta_bound_examples():
    T = default_T_grid(1e4)
    sap = _trace("sap(kminus=-1,kplus=2)", 2.1e4)
    assert beta_lower_bound(sap, 1, T).value == pytest.approx(2, rel=0.02)
    ident = _trace("identity()", 2.1e4)
    assert beta_lower_bound(ident, 2, T).value == 0
    w = _trace("whirl(k=5,alpha=1)", 2.1e4)
    assert beta_lower_bound(w, 1, T).value == pytest.approx(5, rel=0.05)
    with pytest.raises(WindingError):
        beta_lower_bound(w, 0, T)


# theorem 2 diagnostics ----------------------------------------------------------------------------

def test_theorem2_identity_has_zero_extrema():
    chk = theorem2_check(_trace("identity()", 500), default_etas(), default_T_grid(100, 2))
    for c in chk.checks:
        assert np.all(c.phi_plus.running == 0) and np.all(c.phi_minus.running == 0)
    assert chk.phi_plus == chk.phi_minus == "no-obstruction"


@pytest.mark.parametrize("k,fires", [(1, "phi_minus"), (-1, "phi_plus")])
def test_theorem2_superlinear_phase(k, fires):
    chk = theorem2_check(_synthetic(lambda x: k * x * np.abs(x), hw=500), [ETA1, STEP3], default_T_grid(100, 2))
    assert getattr(chk, fires) == "certificate"
    other = "phi_plus" if fires == "phi_minus" else "phi_minus"
    assert getattr(chk, other) == "no-obstruction"
    for c in chk.checks:
        side = getattr(c, fires)
        assert side.monotone and side.growth_slope > 1.5


def test_theorem2_running_extrema_are_monotone():
    chk = theorem2_check(_synthetic(lambda x: x * np.sin(x / 20), hw=500), [ETA1], default_T_grid(100, 2))
    c = chk.checks[0]
    assert np.all(np.diff(c.phi_plus.running) <= 0)
    assert np.all(np.diff(c.phi_minus.running) >= 0)
