import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_mpa.cutoff import KINDS, CutoffFamily, cutoff_table, eval_cutoff, verify_cutoff

SYSTEM_KINDS = ("sine", "sine_sq", "cosine", "cosine_sq")


@pytest.mark.parametrize("kind", KINDS)
def test_plateaus(kind):
    fam = CutoffFamily(kind, 4.0)
    assert fam(0.0) == 1.0 and fam(1.9) == 1.0
    assert fam(4.0) == 0.0 and fam(7.0) == 0.0


@pytest.mark.parametrize("kind", ("sine", "sine_sq", "cosine_sq", "scalar_sine"))
def test_smooth_families_are_c1(kind):
    rep = verify_cutoff(CutoffFamily(kind, 4.0), samples=2000)
    assert rep.is_c1(), rep.line()
    assert rep.sign_violation <= 1e-12
    assert rep.range_violation == 0.0


def test_cosine_family_has_outer_kink():
    # the profile derivative at u = delta^2 is -sin(2 pi) ... non-zero times w:
    # radial slope jump 8 pi / (3 delta)
    rep = verify_cutoff(CutoffFamily("cosine", 4.0), samples=2000)
    assert rep.c1_mismatch_inner < 1e-6
    assert rep.c1_mismatch_outer == pytest.approx(8 * np.pi / 12, rel=1e-5)
    assert not rep.is_c1()


def test_rejects_unknown_kind():
    with pytest.raises(ValueError):
        CutoffFamily("triangle", 1.0)
    with pytest.raises(ValueError):
        CutoffFamily("sine", 0.0)


@given(st.sampled_from(SYSTEM_KINDS), st.floats(-6, 6), st.floats(-6, 6))
def test_radial_symmetry(kind, t, s):
    fam = CutoffFamily(kind, 4.0)
    v = fam(t, s)
    assert fam(-t, s) == pytest.approx(v, abs=1e-15)
    assert fam(s, t) == pytest.approx(v, abs=1e-15)
    assert 0.0 <= v <= 1.0


@given(st.sampled_from(SYSTEM_KINDS), st.floats(0, 6), st.floats(0, 6))
def test_nonincreasing_along_rays(kind, r1, r2):
    fam = CutoffFamily(kind, 4.0)
    lo, hi = sorted((r1, r2))
    assert fam(hi) <= fam(lo) + 1e-15


@given(st.sampled_from(KINDS), st.floats(-5, 5), st.floats(-5, 5))
def test_gradient_matches_difference(kind, t, s):
    fam = CutoffFamily(kind, 4.0)
    _, gt, gs = eval_cutoff(fam, t, s)
    h = 1e-6
    fd_t = (fam(t + h, s) - fam(t - h, s)) / (2 * h)
    r = np.hypot(t, 0 if fam.scalar else s)
    if abs(r - 2) > 1e-3 and abs(r - 4) > 1e-3:  # away from the junctions
        assert gt == pytest.approx(fd_t, abs=1e-6)
        if not fam.scalar:
            fd_s = (fam(t, s + h) - fam(t, s - h)) / (2 * h)
            assert gs == pytest.approx(fd_s, abs=1e-6)


def test_table_shape():
    rows = cutoff_table(CutoffFamily("sine", 4.0), n=11)
    assert len(rows) == 121 and len(rows[0]) == 5
    rows = cutoff_table(CutoffFamily("scalar_sine", 1.0), n=11)
    assert len(rows) == 11
