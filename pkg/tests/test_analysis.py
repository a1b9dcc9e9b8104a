import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from cavmem import analysis
from cavmem.analysis import (
    AUDIT_QUANTITIES, IDEAL, WINDOWED, asymptotic_audit, design, efficiency, gaps_shrink,
    hold_decay, jitter_ratio, jitter_ratio_closed, jitter_scan, jitter_threshold,
    overlap_integral,
)
from cavmem.params import PhysicalParams
from cavmem.schedule import norm, norm_truncated, optimal_window

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "design_example.json"


@pytest.mark.parametrize("Cm", [0.5, 10.0, 100.0, 1000.0])
def test_efficiency_bounds(Cm):
    rep = efficiency(Cm)
    for value in (rep.efficiency_ideal, rep.efficiency_windowed):
        assert 0 <= value <= 1
    assert rep.N_trunc_exact <= rep.N_exact
    assert rep.efficiency_ideal == rep.N_exact ** 2
    assert rep.efficiency_windowed == rep.N_trunc_exact ** 2
    assert rep.efficiency == rep.efficiency_windowed


def test_windowed_headline():
    rep = efficiency(100.0)
    assert rep.asymptotics["windowed_efficiency_estimate"] == pytest.approx(0.9018, abs=1e-4)
    assert rep.efficiency_windowed == pytest.approx(0.9018, abs=0.005)
    assert rep.T == optimal_window(100.0).T_max


def test_ideal_at_zero_delay():
    rep = efficiency(100.0, T=0.0, mode=IDEAL)
    assert rep.efficiency == pytest.approx((100 / 101) ** 2, rel=1e-14)
    assert rep.bound_reference == pytest.approx((100 / 101) ** 2, rel=1e-15)


@pytest.mark.parametrize("T", [0.1, 0.5, 1.0])
def test_ideal_large_cm_limit(T):
    rep = efficiency(1e6, T=T, mode=IDEAL)
    assert rep.efficiency == pytest.approx(math.exp(-4 * T), rel=1e-5)


@pytest.mark.parametrize("mode", [WINDOWED, IDEAL])
def test_simulated_efficiency_agrees(mode):
    rep = efficiency(100.0, mode=mode, simulate=True)
    assert rep.efficiency_numeric == pytest.approx(rep.efficiency, abs=1e-8)
    assert rep.ledger_residual < 1e-8
    assert abs(rep.bookkeeping["closure"]) < 1e-9
    assert json.dumps(rep.to_dict(), default=float)


def test_efficiency_rejects_mode():
    with pytest.raises(ValueError):
        efficiency(100.0, mode="perfect")


@settings(max_examples=40, deadline=None)
@given(kappa=st.floats(1.0, 1e4), x=st.floats(0.01, 5.0), frac=st.floats(-3.0, 3.0))
def test_overlap_against_quadrature(kappa, x, frac):
    T = x / kappa
    delta = frac * T
    f = lambda t: math.exp(-kappa * abs(t - T)) * math.exp(-kappa * abs(t - T - delta))
    pts = [p for p in (T, T + delta) if 0 < p < 2 * T]
    ref, _ = quad(f, 0.0, 2 * T, points=pts or None, epsabs=1e-15, epsrel=1e-12)
    assert overlap_integral(kappa, T, delta) == pytest.approx(ref, rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("Cm", [100.0, 1000.0])
def test_jitter_curve_shape(Cm):
    curve = jitter_scan(Cm, np.linspace(-1.5, 1.5, 61))
    mid = 30
    assert curve.ratio_numeric[mid] == 1.0
    assert np.allclose(curve.ratio_numeric, curve.ratio_numeric[::-1], rtol=0, atol=1e-14)
    right = curve.ratio_numeric[mid:]
    assert np.all(np.diff(right) <= 0)
    assert np.argmax(curve.ratio_numeric) == mid
    assert np.allclose(curve.delays * Cm, curve.deltas)
    assert np.array_equal(curve.efficiency_factor, curve.ratio_numeric ** 2)


@pytest.mark.parametrize("Cm", [100.0, 1000.0])
def test_closed_form_jitter_gap(Cm):
    T = optimal_window(Cm).T_max
    deltas = np.linspace(-T / 2, T / 2, 101)
    for d in deltas:
        exact = jitter_ratio(Cm, T, d)
        assert abs(jitter_ratio_closed(Cm, d, T) - exact) / exact < 1 / Cm


def test_closed_form_domain():
    assert math.isnan(jitter_ratio_closed(100.0, 0.05, T=0.02))
    assert jitter_ratio_closed(100.0, 0.0) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("Cm", [100.0, 1000.0])
def test_jitter_thresholds(Cm):
    assert jitter_threshold(Cm, 0.90) == pytest.approx(0.35, abs=0.05)
    assert jitter_threshold(Cm, 0.99) == pytest.approx(0.10, abs=0.02)
    with pytest.raises(ValueError):
        jitter_threshold(Cm, 1.5)


def test_hold_decay():
    assert hold_decay(0.0) == 1.0
    assert hold_decay(2.0, 0.0) == pytest.approx(math.exp(-2.0))
    assert hold_decay(1.0, 1.0) == pytest.approx(math.exp(-2.0))


def test_audit_examples():
    rows = {(r.Cm, r.quantity): r for r in asymptotic_audit([100.0, 1000.0, 1e4])}
    assert rows[(100.0, "max_truncated_norm_estimate")].abs_gap < 0.005
    assert rows[(100.0, "max_truncated_norm_estimate")].asymptotic == pytest.approx(0.9509, abs=1e-4)
    long_norm = rows[(100.0, "long_delay_norm_estimate")]
    assert long_norm.exact == norm(100.0, 5.0)
    assert long_norm.rel_gap < 1e-3
    assert long_norm.asymptotic == pytest.approx((1 - 1e-4) * math.exp(-10), rel=1e-15)


def test_audit_gaps_shrink():
    rows = asymptotic_audit([100.0, 1000.0, 1e4])
    assert len(rows) == 3 * len(AUDIT_QUANTITIES)
    assert gaps_shrink(rows) == {q: True for q in AUDIT_QUANTITIES}
    with pytest.raises(ValueError):
        asymptotic_audit([])


def test_gaps_shrink_detects_growth():
    rows = [analysis.AuditRow(10.0, q, 1.0, 0.9) for q in AUDIT_QUANTITIES]
    rows += [analysis.AuditRow(100.0, q, 1.0, 0.5) for q in AUDIT_QUANTITIES]
    assert not any(gaps_shrink(rows).values())


def example_params():
    data = json.loads(CONFIG.read_text())
    return PhysicalParams.from_mapping(data), data["Cm"]


def test_design_numbers():
    params, Cm = example_params()
    rep = design(params, Cm=Cm)
    assert rep.T2 == pytest.approx(32e-6, rel=0.02)
    assert rep.T2 == pytest.approx(31.83e-6, rel=1e-3)
    assert rep.pulse_duration == pytest.approx(320e-9, rel=0.02)
    assert rep.window == pytest.approx(1.25e-6, rel=0.02)
    assert rep.efficiency == pytest.approx(0.90, abs=0.01)
    assert rep.bad_cavity_ok and rep.feasibility_general_ok and rep.feasibility_reduced_ok


def test_design_flags_cm_mismatch():
    params, Cm = example_params()
    rep = design(params, Cm=Cm)
    assert not rep.Cm_consistent
    assert rep.Cm == 100.0
    assert rep.Cm_from_alpha_finesse == pytest.approx(15.915, abs=1e-3)
    assert any("differs" in w for w in rep.warnings)
    implied = design(params)
    assert implied.Cm_consistent and implied.Cm == pytest.approx(15.915, abs=1e-3)


def test_design_at_32_us():
    params, _ = example_params()
    params = PhysicalParams(**{**params.__dict__, "T2": 32e-6})
    rep = design(params, Cm=100.0)
    assert rep.pulse_duration == pytest.approx(317e-9, rel=2e-3)
