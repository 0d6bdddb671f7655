"""CSPR geometry, branch selection and Kramers-Kronig field recovery."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jsfr.core import RrcSpec
from jsfr.frontend import Scheme
from jsfr.harness.identities import brute_force_multipliers, grid
from jsfr.recovery import (CSPR_CAP_DB, CsprProfile, GrSpec, SelectMode, cspr_2x2, cspr_3x3,
                           cspr_hybrid, cspr_profile, estimate_cspr, kkr_recover, second_max,
                           select_branches)
from jsfr.txchain import CarrierSpec, FrameSpec, carrier_frequency, generate_frame, modulate

angles = st.floats(-np.pi, np.pi, allow_nan=False)


# -- closed forms ---------------------------------------------------------------

def test_cspr_2x2_examples():
    np.testing.assert_allclose(cspr_2x2(np.pi / 4, np.pi / 3), [0.5, 1.5, 0.25, 1.75], atol=1e-12)
    np.testing.assert_allclose(cspr_2x2(0, 0), [1, 1, 2, 0], atol=1e-12)


def test_cspr_hybrid_examples():
    np.testing.assert_allclose(cspr_hybrid(0, 0), [2, 0, 1, 1], atol=1e-12)
    np.testing.assert_allclose(cspr_hybrid(np.pi / 4, np.pi / 4), [0.5, 1.5, 1.5, 0.5], atol=1e-12)


def test_cspr_3x3_at_pi_over_16():
    """Worked example quoted for the 3x3 coupler: (0.51, 3.7, 1.88) within 0.01.

    The closed form itself evaluates to (0.256, 1.851, 0.893): the first two are
    half the quoted values and the third matches neither scaling, so this check
    is expected to fail.  It is kept as written.
    """
    np.testing.assert_allclose(cspr_3x3(np.pi / 16, np.pi / 16), [0.51, 3.7, 1.88], atol=0.01)


def test_cspr_3x3_middle_at_origin():
    assert cspr_3x3(0, 0)[1] == pytest.approx(2.0)


def test_cspr_grid_pair_sums():
    a, t = grid()
    v = cspr_2x2(a, t)
    assert np.max(np.abs(v[0] + v[1] - 2)) < 1e-12
    assert np.max(np.abs(v[2] + v[3] - 2)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(a=angles, t=angles)
def test_closed_forms_match_brute_force(a, t):
    for scheme, fn in ((Scheme.COUPLER_2X2, cspr_2x2), (Scheme.HYBRID_90, cspr_hybrid),
                       (Scheme.COUPLER_3X3, cspr_3x3)):
        np.testing.assert_allclose(fn(a, t), brute_force_multipliers(scheme, a, t), atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(a=angles, t=angles)
def test_cspr_sums_and_sign(a, t):
    for fn in (cspr_2x2, cspr_hybrid):
        v = fn(a, t)
        assert v.sum() == pytest.approx(4.0, abs=1e-12)
        assert np.all(v >= -1e-12)
    assert np.all(cspr_3x3(a, t) >= -1e-12)


def test_profile_sums_to_four():
    prof = cspr_profile(Scheme.COUPLER_2X2, 0.3, 1.2)
    assert sum(prof.values) == pytest.approx(4.0)


# -- SecondMax ------------------------------------------------------------------

def test_second_max_example():
    assert second_max([0.5, 1.5, 0.25, 1.75]) == 1.5


def test_second_max_needs_two():
    with pytest.raises(ValueError):
        second_max([1.0])


def test_second_max_grid_minima():
    a, t = grid()
    assert second_max(cspr_3x3(a, t)).min() == pytest.approx(0.5, abs=1e-3)
    target = 1 - np.sqrt(2) / 2
    for fn, drop in ((cspr_2x2, 3), (cspr_hybrid, 3)):
        three = np.delete(fn(a, t), drop, axis=0)  # the branch a 3-detector receiver lacks
        assert second_max(three).min() == pytest.approx(target, abs=1e-3)


def test_second_max_at_least_one_with_four_detectors():
    a, t = grid()
    assert second_max(cspr_2x2(a, t)).min() >= 1 - 1e-12
    assert second_max(cspr_hybrid(a, t)).min() >= 1 - 1e-12


# -- selection ------------------------------------------------------------------

def test_select_top2_worked_example():
    prof = cspr_profile(Scheme.COUPLER_2X2, np.pi / 4, np.pi / 3)
    assert set(select_branches(prof, SelectMode.TOP2)) == {"Y", "X-Y"}


def test_select_all():
    prof = cspr_profile(Scheme.HYBRID_90, 0.1, 0.2)
    assert select_branches(prof, SelectMode.ALL) == list(prof.labels)


def test_select_tie_break_by_label_order():
    prof = CsprProfile(Scheme.COUPLER_2X2, ("X", "Y", "X+Y", "X-Y"), (1.0, 1.0, 2.0, 0.0))
    assert select_branches(prof, SelectMode.TOP2) == ["X+Y", "X"]


# -- KKR ------------------------------------------------------------------------

BAUD = 56e9
RATE = 4 * BAUD


def ssb_branch(cspr_db, seed=0, payload=2048):
    """Noiseless single-sideband branch field: shaped 16-QAM plus an edge tone."""
    f = generate_frame(FrameSpec(payload_len=payload), seed)
    s = modulate(f.symbols[:1], f.spec, RrcSpec(0.01, 64, 4)).x
    n = len(s)
    fc = carrier_frequency(s, CarrierSpec())
    amp = np.sqrt(10 ** (cspr_db / 10) * np.mean(np.abs(s.samples) ** 2))
    field = s.samples + amp * np.exp(2j * np.pi * fc * np.arange(n) / RATE)
    return field, fc


def aligned_error_db(got, want):
    ph = np.angle(np.vdot(got, want))
    return 10 * np.log10(np.mean(np.abs(got * np.exp(1j * ph) - want) ** 2) / np.mean(np.abs(want) ** 2))


def test_kkr_constant_current():
    out = kkr_recover(np.ones(512), GrSpec(), 0.0, RATE)
    np.testing.assert_allclose(out.samples, 1.0, atol=1e-9)


def test_kkr_pure_tone():
    n = 4096
    fc = -29e9
    k = round(fc * n / RATE)
    tone = 2.0 * np.exp(2j * np.pi * k * np.arange(n) / n)
    out = kkr_recover(np.abs(tone) ** 2, GrSpec(), k * RATE / n, RATE)
    assert aligned_error_db(out.samples, tone) < -40


def test_kkr_ssb_branch_at_three_db_margin():
    field, fc = ssb_branch(6.0 + 3.0)
    out = kkr_recover(np.abs(field) ** 2, GrSpec(), fc, RATE)
    # carrier sits at fc in the output, as in the transmitted branch field
    assert aligned_error_db(out.samples, field) < -30


def test_kkr_error_falls_with_cspr():
    errs = []
    for c in (6.0, 9.0, 12.0):
        field, fc = ssb_branch(c)
        errs.append(aligned_error_db(kkr_recover(np.abs(field) ** 2, GrSpec(), fc, RATE).samples, field))
    assert errs[0] > errs[1] > errs[2]


@settings(max_examples=10, deadline=None)
@given(c=st.floats(0.1, 10))
def test_kkr_scale_equivariance(c):
    field, fc = ssb_branch(9.0, payload=1024)
    i = np.abs(field) ** 2
    a = kkr_recover(i, GrSpec(), fc, RATE).samples
    b = kkr_recover(c ** 2 * i, GrSpec(), fc, RATE).samples
    np.testing.assert_allclose(b, c * a, atol=1e-9 * c * np.abs(a).max())


def test_kkr_rejects_zero_current():
    with pytest.raises(ValueError):
        kkr_recover(np.zeros(16), GrSpec(), 0.0, RATE)


def test_kkr_clamps_negative_samples():
    i = np.abs(ssb_branch(9.0, payload=512)[0]) ** 2
    i[::97] = -0.1
    assert np.all(np.isfinite(kkr_recover(i, GrSpec(), 0.0, RATE).samples))


def test_gr_spec_validation():
    with pytest.raises(ValueError):
        GrSpec(working_sps=2)


# -- CSPR estimation ----------------------------------------------------------------

def test_estimate_cspr_pure_tone_is_capped():
    n = 1024
    tone = np.exp(2j * np.pi * 37 * np.arange(n) / n)
    assert estimate_cspr(tone, 37 / n, 1.0) == CSPR_CAP_DB


def test_estimate_cspr_known_branch():
    field, fc = ssb_branch(12.0)
    assert estimate_cspr(field, fc, RATE) == pytest.approx(12.0, abs=0.3)
    assert estimate_cspr(np.abs(field) ** 2) == pytest.approx(12.0, abs=0.3)


def test_estimate_cspr_without_tone():
    fc = ssb_branch(12.0)[1]
    f = generate_frame(FrameSpec(payload_len=2048), 0)
    s = modulate(f.symbols[:1], f.spec, RrcSpec(0.01, 64, 4)).x.samples
    assert estimate_cspr(s, fc, RATE) < -20


def test_estimate_cspr_empty():
    with pytest.raises(ValueError):
        estimate_cspr(np.array([]))
