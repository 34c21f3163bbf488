import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dacspec import datasets
from dacspec.calib import (
    CalibrationPoint,
    LevelTrace,
    MonotoneCubic,
    align_theory,
    build_calibration,
    eval_calibration,
    ks_zpl_shift,
    linear_slope,
    theory_offset,
    vbm_referenced_shift,
)
from dacspec.documents import calibration_from_text, calibration_to_text
from dacspec.errors import DuplicatePressure, ExtrapolationRefused, NonMonotone, TooFewPoints

SIV_RUN_PRESSURES = [1, 9, 20, 32, 40, 51, 60, 70, 79, 89, 96, 103, 110, 125, 137, 155, 171, 180]
GEV_RUN_PRESSURES = [8, 12, 20, 30, 40, 50, 60, 69, 79, 90, 99, 109, 119, 130, 140, 149, 157, 168]


def _pts(pairs, ps=1.0, es=0.001):
    return [CalibrationPoint(p, ps, e, es) for p, e in pairs]


def test_affine_data_reproduced(linear_siv):
    mids = np.arange(5.0, 100.0, 10.0)
    np.testing.assert_allclose(eval_calibration(linear_siv, mids), 1.68 + 0.001 * mids, rtol=0, atol=1e-12)
    assert linear_siv.zpl0 == pytest.approx(1.68, abs=1e-15)
    assert not linear_siv.zpl0_extrapolated


def test_bundled_tables_use_run_pressures(siv_cal, gev_cal):
    assert [p.pressure for p in siv_cal.points] == SIV_RUN_PRESSURES
    assert [p.pressure for p in gev_cal.points] == GEV_RUN_PRESSURES
    assert siv_cal.range == (1.0, 180.0)
    assert siv_cal.zpl0_extrapolated


def test_rejections():
    with pytest.raises(NonMonotone):
        build_calibration("SiV", _pts([(30, 1.70), (40, 1.72), (50, 1.71), (60, 1.73)]))
    with pytest.raises(DuplicatePressure):
        build_calibration("SiV", _pts([(10, 1.69), (10, 1.70), (20, 1.71)]))
    with pytest.raises(TooFewPoints):
        build_calibration("SiV", _pts([(10, 1.69), (20, 1.70)]))
    with pytest.raises(ValueError):
        build_calibration("NV", _pts([(0, 1.9), (10, 1.95), (20, 2.0)]))


def test_exact_at_nodes(siv_cal, gev_cal):
    for cal in (siv_cal, gev_cal):
        for p in cal.points:
            assert eval_calibration(cal, p.pressure) == p.energy


def test_out_of_range_refused(siv_cal):
    with pytest.raises(ExtrapolationRefused):
        eval_calibration(siv_cal, 0.0)
    with pytest.raises(ExtrapolationRefused):
        eval_calibration(siv_cal, 181.0)


def test_monotone_scan(siv_cal, gev_cal):
    for cal in (siv_cal, gev_cal):
        grid = np.linspace(*cal.range, 1000)
        assert np.all(np.diff(eval_calibration(cal, grid)) > 0)


@settings(max_examples=100, deadline=None)
@given(
    steps=st.lists(st.tuples(st.floats(0.5, 30), st.floats(1e-5, 0.05)), min_size=2, max_size=15),
)
def test_any_accepted_calibration_is_monotone(steps):
    p, e, pairs = 0.0, 1.7, []
    for dp, de in steps:
        pairs.append((p, e))
        p, e = p + dp, e + de
    pairs.append((p, e))
    cal = build_calibration("GeV", _pts(pairs))
    vals = eval_calibration(cal, np.linspace(*cal.range, 1000))
    assert np.all(np.diff(vals) > 0)
    for q, en in pairs:
        assert eval_calibration(cal, q) == en


def test_fritsch_carlson_limiter_keeps_overshoot_away():
    # steep step followed by a plateau: a plain cubic spline would overshoot
    f = MonotoneCubic([0, 1, 2, 3], [0.0, 0.01, 1.0, 1.001])
    xs = np.linspace(0, 3, 3001)
    y = f(xs)
    assert np.all(np.diff(y) >= 0)
    assert y.max() <= 1.001 + 1e-15


def test_derivative_matches_finite_difference(gev_cal):
    f = gev_cal.interpolant
    for p in np.linspace(9, 167, 40):
        fd = (f(p + 1e-5) - f(p - 1e-5)) / 2e-5
        assert f.derivative(p) == pytest.approx(fd, rel=1e-5)


def test_linear_slope_examples():
    line = _pts([(p, 1.7 + 0.0027 * p) for p in range(0, 41, 5)])
    slope, err = linear_slope(line, (0, 40))
    assert slope == pytest.approx(2.7, rel=1e-10)
    assert err == pytest.approx(0.0, abs=1e-9)
    s_siv, _ = linear_slope(datasets.load_points("SiV"), (0, 20))
    assert s_siv == pytest.approx(1.0, abs=0.2)
    s_gev, _ = linear_slope(datasets.load_points("GeV"), (20, 40))
    assert s_gev == pytest.approx(2.7, abs=0.3)
    with pytest.raises(TooFewPoints):
        linear_slope(line, (41, 60))


def test_slope_consistency_with_interpolant(siv_cal):
    lo, hi = 1.0, 20.0
    ps = np.linspace(lo, hi, 39)
    sampled = _pts([(p, float(eval_calibration(siv_cal, p))) for p in ps])
    slope, _ = linear_slope(sampled, (lo, hi))
    mean_slope = (eval_calibration(siv_cal, hi) - eval_calibration(siv_cal, lo)) / (hi - lo) * 1000
    assert slope == pytest.approx(mean_slope, rel=0.02)


def test_gev_to_siv_slope_ratio():
    s_gev, _ = linear_slope(datasets.load_points("GeV"), (20, 40))
    s_siv, _ = linear_slope(datasets.load_points("SiV"), (20, 40))
    assert s_gev / s_siv == pytest.approx(2.7, rel=0.25)


@pytest.mark.parametrize(
    "species, e0_theory, zpl0, offset",
    [("SiV", 1.57, 1.68, 0.11), ("GeV", 2.00, 2.06, 0.06), ("SnV", 1.98, 2.00, 0.02)],
)
def test_align_theory_offsets(species, e0_theory, zpl0, offset):
    table = datasets.load_theory(species)
    assert dict(table)[0.0] == e0_theory
    assert theory_offset(table, zpl0) == pytest.approx(offset, abs=1e-12)
    aligned = align_theory(table, zpl0)
    assert dict(aligned)[0.0] == pytest.approx(zpl0, abs=1e-12)


@given(
    st.lists(st.floats(-5, 5), min_size=1, max_size=20),
    st.floats(0.5, 3.0),
)
def test_align_theory_preserves_differences(energies, zpl0):
    theory = [(0.0, 1.5)] + [(float(i + 1), e) for i, e in enumerate(energies)]
    aligned = align_theory(theory, zpl0)
    off = zpl0 - 1.5
    for (p0, e0), (p1, e1) in zip(theory, aligned):
        assert p0 == p1 and e1 == e0 + off


def test_align_theory_identity_and_error():
    t = [(0.0, 1.68), (10.0, 1.69)]
    assert align_theory(t, 1.68) == t
    with pytest.raises(ValueError):
        align_theory([(5.0, 1.7)], 1.68)


def _trace(p, eu, eg, vbm, cbm=None, species="SiV"):
    return LevelTrace(np.asarray(p, float), eu, eg, vbm, cbm, species)


def test_vbm_referenced_shift():
    p = np.array([0.0, 20.0, 50.0, 100.0])
    vbm = 0.3 + 0.004 * p
    tr = _trace(p, vbm - 0.2, vbm + 0.5 + 0.002 * p, vbm, vbm + 5.0 + 0.001 * p)
    d_eg = dict(vbm_referenced_shift(tr, "eg"))
    assert d_eg[0.0] == 0.0
    for q in p:
        assert d_eg[q] == pytest.approx(0.002 * q, abs=1e-15)
    assert all(v == pytest.approx(0.0, abs=1e-15) for _, v in vbm_referenced_shift(tr, "eu"))
    assert dict(vbm_referenced_shift(tr, "cbm"))[100.0] == pytest.approx(0.1, abs=1e-14)
    no_cbm = _trace(p, vbm, vbm + 1, vbm)
    with pytest.raises(ValueError):
        vbm_referenced_shift(no_cbm, "cbm")


def test_ks_zpl_shift():
    p = np.array([-10.0, 0.0, 30.0, 60.0])
    eu = 1.0 + 0.01 * p
    constant = _trace(p, eu, eu + 1.7, np.zeros(4))
    assert all(abs(v) < 1e-14 for _, v in ks_zpl_shift(constant))
    growing = _trace(p, eu, eu + 1.7 + 0.003 * p, np.zeros(4))
    out = ks_zpl_shift(growing)
    assert dict(out)[0.0] == 0.0
    slopes = [(v1 - v0) / (p1 - p0) for (p0, v0), (p1, v1) in zip(out, out[1:])]
    assert slopes == pytest.approx([0.003] * 3, rel=1e-12)


def test_level_trace_validation():
    with pytest.raises(ValueError):
        _trace([0.0], [1.0], [2.0], [0.0])
    with pytest.raises(ValueError):
        _trace([0.0, 10.0], [1.0], [2.0, 2.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        _trace([5.0, 10.0], [1.0, 1.0], [2.0, 2.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        _trace([10.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.0, 0.0])


def test_calibration_document_round_trip(gev_cal):
    masked = build_calibration("GeV", datasets.load_points("GeV"), mask_below=20.0)
    for cal in (gev_cal, masked):
        text = calibration_to_text(cal)
        back = calibration_from_text(text)
        assert back.species == cal.species
        assert back.zpl0 == cal.zpl0
        assert back.range == cal.range
        assert back.mask_below == cal.mask_below
        assert back.all_points == cal.all_points
    assert "mask_below_gpa = 20" in calibration_to_text(masked)
    assert len(masked.excluded) == 2 and masked.range[0] == 20.0
