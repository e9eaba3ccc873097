from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_mpa.builtins import (WORKED_INDICES, WORKED_THETA, DeskScalar, DeskSystem,
                                 worked_nonlinearity)
from orlicz_mpa.cutoff import CutoffFamily
from orlicz_mpa.nfunction import IndexPair
from orlicz_mpa.nonlinearity import (NonlinearitySpec, admissible_r_intervals,
                                     build_modified, build_scalar_modified, check_h2,
                                     check_hypotheses, default_D3, derive_growth_constants,
                                     scalar_K)

DESK_IP = IndexPair(1.5, 1.5, 2)


@pytest.fixture(scope="module")
def s4_report():
    ip = WORKED_INDICES
    return check_hypotheses(worked_nonlinearity(), ip, ip, 10_000, 4.0)


def test_intervals_exact():
    i1, i2 = admissible_r_intervals(WORKED_INDICES, WORKED_INDICES, *WORKED_THETA)
    assert (i1.lo, i1.hi) == (5, Fraction(37, 4))
    assert (i2.lo, i2.hi) == (5, Fraction(37, 4))
    assert 7 in i1 and 5 not in i1


def test_theta_must_exceed_one():
    with pytest.raises(ValueError):
        admissible_r_intervals(WORKED_INDICES, WORKED_INDICES, 1, 6)


def test_worked_example_verdicts(s4_report):
    assert s4_report.passed, "\n".join(s4_report.lines())
    for name in ("F1", "F2 (t-partial)", "F2 (s-partial)", "F3", "r1 admissible", "mu > m"):
        assert s4_report.get(name).passed
    assert s4_report.samples == 10_000


def test_growth_constants():
    M5, M6 = derive_growth_constants((2.0**41, 2.0**41), (7, 7))
    assert M5 == M6 == 2.0**42
    assert derive_growth_constants((1.0, 3.0), (2.0, 4.0)) == (13.0, 7.0)


def test_h2_witness_at_5_0():
    v = check_h2(worked_nonlinearity(), (8.5, 8.5))
    assert not v.passed
    assert v.witness == (5.0, 0.0)
    assert v.lhs > v.rhs


def test_h2_holds_for_pure_power():
    spec = NonlinearitySpec.from_expression("|t|^3+|s|^3")
    assert check_h2(spec, (3.0, 3.0)).passed


def test_wrong_claim_is_reported():
    spec = NonlinearitySpec.from_expression("|t|^3+|s|^3", k=(4.0, 4.0), M12=(1.0, 1.0))
    rep = check_hypotheses(spec, IndexPair(2.0, 2.5, 6), sample_budget=2000, radius=4.0)
    v = rep.get("F1")
    assert not v.passed and v.worst_margin < 0


def test_scalar_K():
    assert scalar_K(DESK_IP) == pytest.approx(4.5)
    assert scalar_K(IndexPair(Fraction(4), Fraction(5), 6)) == Fraction(28, 5)


def test_desk_D3_oracle():
    # sup_{1/2 <= t <= 1} t^2.2 / t^2.5 = 2^0.3
    assert default_D3(DeskScalar().nonlinearity(), 1.0) == pytest.approx(2**0.3, rel=1e-12)


def test_desk_scalar_checks():
    spec = DeskScalar().nonlinearity()
    rep = check_hypotheses(spec, DESK_IP, sample_budget=2000, radius=1.0)
    assert rep.get("k < K").passed
    assert rep.constants["K"] == pytest.approx(4.5)


def test_system_modification_needs_delta_4():
    spec = DeskSystem().nonlinearity()
    with pytest.raises(ValueError):
        build_modified(spec, CutoffFamily("sine", 2.0))
    mod = build_modified(spec, CutoffFamily("sine", 4.0))
    assert mod.M5 == pytest.approx(2.2 + 2.2)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_modified_equals_F_inside(t, s):
    spec = DeskSystem().nonlinearity()
    mod = build_modified(spec, CutoffFamily("sine", 4.0))
    if np.hypot(t, s) <= 2.0:
        val = float(mod(None, np.array([t]), np.array([s]))[0])
        assert val == pytest.approx(abs(t) ** 2.2 + abs(s) ** 2.2, rel=1e-14, abs=1e-300)


@given(st.floats(-2, 2))
def test_scalar_modified_gradient(t):
    mod = build_scalar_modified(DeskScalar().nonlinearity(), 1.0)
    h = 1e-7
    _, dt, _ = mod.evaluate(None, np.array([t]))
    fd = (mod(None, np.array([t + h]))[0] - mod(None, np.array([t - h]))[0]) / (2 * h)
    assert dt[0] == pytest.approx(fd, rel=1e-5, abs=1e-7)


@given(st.floats(0.01, 3))
def test_scalar_modified_superlinear(t):
    # theta F~ <= t F~_t with theta = min(r, mu)
    mod = build_scalar_modified(DeskScalar().nonlinearity(), 1.0)
    F, dt, _ = mod.evaluate(None, np.array([t]))
    assert mod.theta * F[0] <= t * dt[0] * (1 + 1e-12)


def test_signed_restriction():
    mod = build_scalar_modified(DeskScalar().nonlinearity(), 1.0, sign=1)
    v, dt, _ = mod.evaluate(None, np.array([-0.3, 0.3]))
    assert v[0] == 0 and dt[0] == 0 and v[1] > 0
