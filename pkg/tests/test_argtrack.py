import numpy as np
import pytest
from hypothesis import given, strategies as st

from meanwind.argtrack import ArgumentTrace, mean_motion, unwrap_arg, winding_number
from meanwind.exceptions import DepthExhausted, MeanMotionNotDetected, NonConvergentTails, ZeroDeterminant
from meanwind.symbolkit import SampleGrid, det_eval, parse_symbol, preset


def _check_invariants(sym, trace):
    assert np.all(np.abs(np.diff(trace.values)) < np.pi / 2)
    d = det_eval(sym, trace.nodes)
    assert np.allclose(np.exp(1j * trace.values), d / np.abs(d), atol=1e-9)
    assert -np.pi < trace.values[0] <= np.pi


def test_identity_is_constant_zero():
    sym = preset("identity()")
    tr = unwrap_arg(sym, SampleGrid.symmetric(101, 50))
    assert np.all(tr.values == 0)


def test_linear_phase_follows_nodes():
    sym = parse_symbol("exp(i*x)")
    tr = unwrap_arg(sym, SampleGrid(51, -10, 10))
    _check_invariants(sym, tr)
    # branch at the leftmost node is the principal value of -10
    assert np.allclose(tr.values - tr.nodes, tr.values[0] + 10, atol=1e-12)
    assert tr.values[-1] - tr.values[0] == pytest.approx(20, abs=1e-12)


def test_whirl_increment_on_half_line():
    sym = preset("whirl(k=2,alpha=0.5)")
    tr = unwrap_arg(sym, SampleGrid(11, 0, 100))
    _check_invariants(sym, tr)
    assert tr.values[-1] - tr.values[0] == pytest.approx(20, abs=1e-9)


@pytest.mark.parametrize("spec", ["sap()", "mix2()", "whirl(k=5,alpha=1)", "diag(sap(); whirl(k=-1,alpha=0.5))"])
def test_step_invariant_and_unit_phase(spec):
    sym = preset(spec)
    tr = unwrap_arg(sym, SampleGrid.symmetric(201, 300))
    _check_invariants(sym, tr)
    assert tr.depth is not None and len(tr.depth) == len(tr) - 1


def test_sap_trace_matches_closed_form_phase():
    sym = preset("sap(kminus=-1,kplus=2)")
    tr = unwrap_arg(sym, SampleGrid.symmetric(401, 2000, max_spacing=0.5))
    x = tr.nodes
    s = (1 + np.tanh(x)) / 2
    phase = s * (2 * x + np.sin(x)) + (1 - s) * (-x + np.cos(np.sqrt(2) * x))
    diff = tr.values - phase
    assert np.ptp(diff) < 1e-9
    assert abs(diff[0] / (2 * np.pi) - np.round(diff[0] / (2 * np.pi))) < 1e-9


def test_refined_grid_changes_only_a_constant():
    sym = preset("sap()")
    a = unwrap_arg(sym, SampleGrid.symmetric(201, 100))
    b = unwrap_arg(sym, SampleGrid.symmetric(801, 100, refine=(0.123, 7.7)))
    shared, ia, ib = np.intersect1d(a.nodes, b.nodes, return_indices=True)
    assert len(shared) > 100
    assert np.ptp(a.values[ia] - b.values[ib]) < 1e-8


def test_product_trace_is_additive():
    f, g = preset("sap()"), preset("rational(m=2)")
    fg = parse_symbol(f"({f.to_text()})*({g.to_text()})")
    grid = SampleGrid.symmetric(401, 200, max_spacing=0.5)
    tf, tg, tfg = (unwrap_arg(s, grid) for s in (f, g, fg))
    nodes = tfg.nodes
    diff = tfg.values - tf(nodes) - tg(nodes)
    # shared grid nodes are exact; interpolated ones carry only O(h^2) error
    on = np.isin(nodes, tf.nodes) & np.isin(nodes, tg.nodes)
    assert np.ptp(diff[on]) < 1e-8
    assert abs(diff[0] / (2 * np.pi) - np.round(diff[0] / (2 * np.pi))) < 1e-8


def test_zero_determinant_reported():
    sym = parse_symbol("div(x, x + i, 1)")
    with pytest.raises(ZeroDeterminant) as info:
        unwrap_arg(sym, SampleGrid.symmetric(101, 10))
    assert info.value.node == 0.0


def test_depth_exhausted_carries_segment():
    sym = preset("whirl(k=1,alpha=2)")
    with pytest.raises(DepthExhausted) as info:
        unwrap_arg(sym, SampleGrid.symmetric(11, 1e4), max_depth=3)
    lo, hi = info.value.segment
    assert lo < hi
    with pytest.raises(DepthExhausted):
        unwrap_arg(sym, SampleGrid.symmetric(11, 1e4), max_nodes=10_000)


def test_trace_integral_is_exact_for_piecewise_linear():
    x = np.array([-1.0, 0.0, 2.0, 5.0])
    tr = ArgumentTrace(x, np.array([1.0, -1.0, 3.0, 0.0]))
    assert tr.integral(-1.0, 5.0) == pytest.approx(0.0 + 2.0 + 4.5)
    assert tr.integral(-0.5, 1.0) == pytest.approx(-0.25 + 0.0)


def test_trace_csv_header(tmp_path):
    tr = unwrap_arg(preset("rational(m=1)"), SampleGrid.symmetric(11, 5))
    p = tmp_path / "trace.csv"
    tr.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == f"# digest={tr.digest}"
    assert lines[1].startswith("# branch=")
    assert lines[2] == "x,arg"
    assert len(lines) == 3 + len(tr)


# winding numbers ------------------------------------------------------------------

def test_winding_identity_and_phi_cubed():
    grid = SampleGrid.symmetric(2001, 1e4)
    assert winding_number(unwrap_arg(preset("identity()"), grid)).value == 0
    w = winding_number(unwrap_arg(parse_symbol("phi(x)^3"), grid))
    assert w.value == 3
    assert abs(w.residual) < 1e-3


def test_winding_rejects_whirl():
    tr = unwrap_arg(preset("whirl(k=2,alpha=0.5)"), SampleGrid.symmetric(2001, 1e4))
    with pytest.raises(NonConvergentTails):
        winding_number(tr)


@given(st.floats(-np.pi, np.pi), st.integers(-3, 3))
def test_winding_invariant_under_unimodular_constant(c, m):
    grid = SampleGrid.symmetric(1001, 1e4)
    base = preset(f"rational(m={m})")
    rotated = parse_symbol(f"exp(i*({c!r}))*({base.to_text()})")
    a, b = unwrap_arg(base, grid), unwrap_arg(rotated, grid)
    assert winding_number(a).value == winding_number(b).value == m
    assert np.ptp(b.values - a.values) < 1e-9


# mean motion -------------------------------------------------------------------------

def test_mean_motion_linear():
    tr = unwrap_arg(parse_symbol("exp(3*i*x)"), SampleGrid.symmetric(2001, 2000, max_spacing=0.2))
    for side in "+-":
        assert mean_motion(tr, side, 50).slope == pytest.approx(3, abs=1e-6)


def test_mean_motion_sap():
    tr = unwrap_arg(preset("sap(kminus=-1,kplus=2)"), SampleGrid.symmetric(2001, 4000, max_spacing=0.5))
    assert mean_motion(tr, "+", 100).slope == pytest.approx(2, rel=0.01)
    assert mean_motion(tr, "-", 100).slope == pytest.approx(-1, rel=0.01)


def test_mean_motion_whirl_is_sublinear():
    tr = unwrap_arg(preset("whirl(k=2,alpha=0.5)"), SampleGrid.symmetric(4001, 1e6))
    mm = mean_motion(tr, "+", 1e4)
    assert abs(mm.slope) < 0.02


def test_mean_motion_needs_room_and_convergence():
    tr = unwrap_arg(parse_symbol("exp(i*x)"), SampleGrid.symmetric(501, 100))
    with pytest.raises(MeanMotionNotDetected):
        mean_motion(tr, "+", 50)
    x = np.linspace(0, 1e4, 10001)
    wild = ArgumentTrace.from_function(lambda t: t * np.sin(np.log1p(t)), x)
    with pytest.raises(MeanMotionNotDetected):
        mean_motion(wild, "+", 100)
