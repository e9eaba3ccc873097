from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_mpa.builtins import phi1_kernel, phi2_kernel
from orlicz_mpa.nfunction import (GrowthKernel, HypothesisFailure, KernelError, IndexPair,
                                  build_from_kernel, complement, estimate_indices,
                                  power_bound, power_nfunction, sobolev_conjugate,
                                  sobolev_inverse_direct, verify_kernel_hypotheses,
                                  zeta_envelope)

# oracle values computed once with mpmath at 25-30 digits
PHI2_AT_1 = 1.13765107283075822249760084428
COMP_PHI1 = {1.0: 0.409283447371231174727096352568, 3.0: 1.69873074175415475223010072568}
SOBOLEV_INV_PHI1_N6_AT_2 = 12.07469188675847245082026
# sup of t phi2'(t)/phi2(t); the ratio approaches 4 at 0 and 5 only at infinity
PHI2_M = 4.358598


@pytest.fixture(scope="module")
def nf1():
    return build_from_kernel(phi1_kernel())


@pytest.fixture(scope="module")
def nf2():
    return build_from_kernel(phi2_kernel())


def test_phi1_indices(nf1):
    ip = estimate_indices(nf1, 6)
    assert ip.l == pytest.approx(4, abs=1e-6)
    assert ip.m == pytest.approx(5, abs=1e-6)


def test_phi2_indices(nf2):
    ip = estimate_indices(nf2, 6)
    assert ip.l == pytest.approx(4, abs=1e-6)
    assert ip.m == pytest.approx(PHI2_M, abs=1e-5)


def test_phi2_value_matches_oracle(nf2):
    assert nf2(1.0) == pytest.approx(PHI2_AT_1, rel=1e-12)


def test_derived_exponents_exact():
    ip = IndexPair(Fraction(4), Fraction(5), 6)
    assert ip.l_star == 12 and ip.m_star == 30
    assert ip.l_tilde == Fraction(4, 3)
    assert ip.phi2_holds()


def test_complement_matches_oracle(nf1):
    c = complement(nf1)
    for t, ref in COMP_PHI1.items():
        assert float(c(t)) == pytest.approx(ref, rel=1e-10)


def test_double_complement_is_original(nf1):
    assert complement(complement(nf1)) is nf1


def test_power_complement_closed_form():
    p = power_nfunction(3.0)
    t = np.linspace(0.1, 5, 20)
    assert np.allclose(complement(p)(t), t**1.5 / 1.5, rtol=1e-13)


def test_sobolev_conjugate_two_routes(nf1):
    s = sobolev_conjugate(nf1, 6)
    assert float(s.inverse(2.0)) == pytest.approx(SOBOLEV_INV_PHI1_N6_AT_2, rel=1e-10)
    direct = sobolev_inverse_direct(nf1, 6, 2.0, 1e-30)
    assert direct == pytest.approx(SOBOLEV_INV_PHI1_N6_AT_2, rel=1e-9)


def test_sobolev_conjugate_indices(nf1):
    ip = estimate_indices(sobolev_conjugate(nf1, 6))
    assert ip.l == pytest.approx(12, rel=1e-6)
    assert ip.m == pytest.approx(30, rel=1e-5)


def test_sobolev_conjugate_needs_m_below_N():
    with pytest.raises(HypothesisFailure):
        sobolev_conjugate(power_nfunction(3.0), 2)


def test_lower_index_at_most_one_rejected():
    with pytest.raises(HypothesisFailure):
        estimate_indices(power_nfunction(0.8))


def test_decreasing_kernel_rejected():
    with pytest.raises(KernelError):
        build_from_kernel(GrowthKernel.power(0.9))


def test_kernel_reports(nf1):
    assert verify_kernel_hypotheses(phi1_kernel(), 6).passed
    assert verify_kernel_hypotheses(phi2_kernel(), 6).passed
    rep = verify_kernel_hypotheses(GrowthKernel.power(2.0), 2)  # m = 2 = N
    assert not rep.passed


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_sandwich_phi1(t, s):
    # zeta0(t) Phi(s) <= Phi(s t) <= zeta1(t) Phi(s)
    nf = build_from_kernel(phi1_kernel())
    ip = IndexPair(4.0, 5.0, 6)
    mid = float(nf(s * t))
    base = float(nf(s))
    assert zeta_envelope(ip, t, "z0") * base <= mid * (1 + 1e-10)
    assert mid <= zeta_envelope(ip, t, "z1") * base * (1 + 1e-10)


@given(st.floats(1e-3, 50), st.floats(1e-3, 50))
def test_young_inequality(a, b):
    nf = build_from_kernel(phi1_kernel())
    c = complement(nf)
    assert a * b <= float(nf(a)) + float(c(b)) + 1e-10 * (a * b)


@given(st.floats(1e-4, 1e4))
def test_ratio_between_indices(t):
    nf = build_from_kernel(phi2_kernel())
    r = float(nf.ratio(np.array([t]))[0])
    assert 4 - 1e-9 <= r <= PHI2_M + 1e-6


@given(st.floats(1e-6, 1e6))
def test_inverse_round_trip(y):
    nf = build_from_kernel(phi2_kernel())
    assert float(nf(nf.inverse(y))) == pytest.approx(y, rel=1e-9)


def test_zeta_envelopes():
    ip = IndexPair(4.0, 5.0, 6)
    assert zeta_envelope(ip, 1.0, "z0") == zeta_envelope(ip, 1.0, "z1") == 1.0
    assert zeta_envelope(ip, 2.0, "z0") == 16 and zeta_envelope(ip, 2.0, "z1") == 32
    assert zeta_envelope(ip, 0.5, "z4") == 0.5**30
    assert zeta_envelope(ip, 2.0, "z5") == 2.0**30


@given(st.floats(1e-3, 0.6), st.sampled_from([1.5, 2.0, 3.0]))
def test_power_bound_inside_unit_level(t, beta):
    nf = build_from_kernel(phi1_kernel())
    assert float(nf(t)) < 1
    assert power_bound(nf, t, beta)


def test_power_bound_refused_outside():
    nf = build_from_kernel(phi1_kernel())
    with pytest.raises(ValueError):
        power_bound(nf, 2.0, 2.0)
    with pytest.raises(ValueError):
        power_bound(nf, 0.0, 2.0)
