import math

import pytest
from hypothesis import given, strategies as st

from cavmem.params import (
    BadCavityDiagnostic, DimensionlessParams, ParamsError, PhysicalParams,
    airy_minimum, bad_cavity_check, derive, einstein_A, stated_cm,
)

BASE = dict(alpha_L=0.1, finesse=1000.0, round_trip_length=0.01, wavelength=606e-9,
            cross_section=1e-8, sample_length=1e-3)


def make(**over):
    kw = dict(BASE, T2=32e-6)
    kw.update(over)
    return PhysicalParams(**kw)


def test_gamma_is_inverse_t2():
    p = make(T2=31.83e-6)
    assert p.gamma * p.T2 == 1.0
    assert p.T1 == pytest.approx(p.T2 / 2)


def test_linewidth_gives_t2():
    p = PhysicalParams.from_linewidth(1e4, **BASE)
    assert p.T2 == pytest.approx(31.83e-6, rel=1e-3)


@pytest.mark.parametrize("field,value", [
    ("alpha_L", 0.0), ("alpha_L", -0.1), ("finesse", 1.0), ("finesse", 0.5),
    ("T2", 0.0), ("wavelength", -1.0), ("T2", math.inf), ("alpha_L", math.nan),
])
def test_rejects_bad_values(field, value):
    with pytest.raises(ParamsError):
        make(**{field: value})


def test_warnings_for_thick_medium_and_small_fresnel():
    assert make().warnings == []
    thick = make(alpha_L=2.0)
    assert any("optically thin" in w for w in thick.warnings)
    narrow = make(cross_section=1e-12)
    assert any("Fresnel" in w for w in narrow.warnings)


def test_cm_from_alpha_and_finesse():
    dims = derive(make(finesse=2 * math.pi * 1000))
    assert dims.Cm == pytest.approx(100.0, rel=1e-12)
    assert derive(make()).Cm == pytest.approx(15.915494, rel=1e-6)


def test_airy_minimum_example():
    dims = DimensionlessParams.from_cm(100.0, 1000.0)
    assert dims.C_min == pytest.approx(100 / (1 + (2000 / math.pi) ** 2), rel=1e-14)
    assert dims.C_min == pytest.approx(2.4674e-4, rel=1e-4)
    assert dims.C_min_approx == pytest.approx(1e-4)


@given(alpha=st.floats(1e-4, 0.9), finesse=st.floats(2.5, 1e7),
       k=st.sampled_from([2.0, 4.0, 0.5, 8.0]))
def test_derive_scales_with_finesse(alpha, finesse, k):
    a = derive(make(alpha_L=alpha, finesse=finesse))
    b = derive(make(alpha_L=alpha, finesse=finesse * k))
    assert b.Cm == pytest.approx(k * a.Cm, rel=1e-15)
    assert a.Cm == pytest.approx(alpha * finesse / (2 * math.pi), rel=1e-12)
    assert 0 < a.C_min < a.Cm
    assert a.C_min / a.Cm == pytest.approx(1 / (1 + (2 * finesse / math.pi) ** 2), rel=1e-14)


def test_dimensionless_validation():
    with pytest.raises(ParamsError):
        DimensionlessParams(Cm=1.0, gamma=1.0, C_min=2.0, finesse=10.0)
    with pytest.raises(ParamsError):
        DimensionlessParams.from_cm(-1.0, 10.0)


def test_from_mapping_variants():
    lw = PhysicalParams.from_mapping(dict(BASE, absorption_linewidth=1e4))
    assert lw.T2 == pytest.approx(1 / (math.pi * 1e4))
    data = {k: v for k, v in BASE.items() if k != "finesse"}
    via_cm = PhysicalParams.from_mapping(dict(data, T2=1e-5, Cm=100.0))
    assert via_cm.finesse == pytest.approx(2 * math.pi * 1000)


@pytest.mark.parametrize("missing", ["alpha_L", "wavelength", "T2", "finesse"])
def test_missing_key_named(missing):
    data = dict(BASE, T2=1e-5)
    del data[missing]
    with pytest.raises(ParamsError, match=missing):
        PhysicalParams.from_mapping(data)


def test_unknown_and_conflicting_keys():
    with pytest.raises(ParamsError, match="bogus"):
        PhysicalParams.from_mapping(dict(BASE, T2=1e-5, bogus=1))
    with pytest.raises(ParamsError):
        PhysicalParams.from_mapping(dict(BASE, T2=1e-5, absorption_linewidth=1e4))
    assert stated_cm({"Cm": 100}) == 100.0
    assert stated_cm({}) is None
    with pytest.raises(ParamsError):
        stated_cm({"Cm": 0})


def test_einstein_a_scaling_and_zero():
    assert einstein_A(make(dipole_moment=0.0)).rate == 0.0
    a1 = einstein_A(make(dipole_moment=1e-30)).rate
    a2 = einstein_A(make(dipole_moment=2e-30)).rate
    assert a2 == pytest.approx(4 * a1, rel=1e-14)
    with pytest.raises(ParamsError):
        einstein_A(make())


def test_einstein_a_one_debye_by_hand():
    # omega^3 d^2 / (3 pi eps0 hbar c^3) with CODATA 2018 values typed in
    c = 299792458.0
    hbar = 1.054571817e-34
    eps0 = 8.8541878128e-12
    d = 3.336e-30
    w = 2 * math.pi * c / 606e-9
    expected = w ** 3 * d ** 2 / (3 * math.pi * eps0 * hbar * c ** 3)
    got = einstein_A(make(dipole_moment=d))
    # loose enough to absorb the CODATA 2018 -> 2022 eps0 revision
    assert got.rate == pytest.approx(expected, rel=1e-8)
    assert got.T2 == pytest.approx(2 / expected, rel=1e-8)


def test_bad_cavity_examples():
    dims = DimensionlessParams.from_cm(100.0, 1000.0, gamma=1 / 32e-6)
    wide = bad_cavity_check(make(round_trip_length=0.1), dims)
    assert wide.ratio == pytest.approx(3.125e6 / (2 * math.pi * 299792458.0 / 100), rel=1e-12)
    assert wide.ratio == pytest.approx(0.166, abs=0.002)
    assert not wide.passed
    short = bad_cavity_check(make(round_trip_length=0.01), dims)
    assert short.ratio == pytest.approx(wide.ratio / 10, rel=1e-12)
    assert short.passed
    assert BadCavityDiagnostic(0.0, 0.0, 1.0).passed


def test_airy_minimum_large_finesse():
    assert airy_minimum(100.0, 1e6) == pytest.approx(100.0 * math.pi ** 2 / 4e12, rel=1e-11)
