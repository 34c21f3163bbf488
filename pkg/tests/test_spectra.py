import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dacspec import datasets
from dacspec.errors import OutOfRange, ParseError
from dacspec.peakfit import LorentzianParams
from dacspec.spectra import (
    ENERGY_UNITS,
    EnergyQuantity,
    Spectrum,
    convert_energy,
    mean_with_ci,
    parse_spectrum,
    read_spectrum,
    resample_to_energy,
    synth_spectrum,
    write_spectrum,
)


def test_hc_definition():
    q = convert_energy(EnergyQuantity(1239.84198, "nm"), "eV")
    assert q.unit == "eV"
    assert q.value == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("thz, mev", [(17.0, 70.31), (78.0, 322.6)])
def test_thz_to_mev_matches_reported_shifts(thz, mev):
    q = convert_energy(EnergyQuantity(thz, "THz"), "meV")
    assert q.value == pytest.approx(mev, abs=0.05)


def test_conversion_errors():
    with pytest.raises(OutOfRange):
        EnergyQuantity(0.0, "nm")
    with pytest.raises(OutOfRange):
        EnergyQuantity(-5.0, "nm")
    with pytest.raises(ValueError):
        convert_energy(EnergyQuantity(1.0, "eV"), "Hz")
    with pytest.raises(ValueError):
        EnergyQuantity(1.0, "kcal")


@given(
    value=st.floats(1e-3, 1e4, allow_nan=False),
    src=st.sampled_from(ENERGY_UNITS),
    dst=st.sampled_from(ENERGY_UNITS),
)
def test_conversion_round_trip(value, src, dst):
    q = EnergyQuantity(value, src)
    back = convert_energy(convert_energy(q, dst), src)
    assert back.value == pytest.approx(value, rel=1e-12)


def _nm_spectrum(lams, intens=None):
    intens = np.arange(len(lams), dtype=float) + 1 if intens is None else intens
    return Spectrum(lams, intens, "nanometer", {"sample": "a"})


def test_resample_reverses_order():
    s = _nm_spectrum(np.arange(700.0, 708.0))
    e = resample_to_energy(s)
    assert e.axis_unit == "electronvolt"
    assert e.axis[-3:].tolist() == [1239.84198 / 702, 1239.84198 / 701, 1239.84198 / 700]
    # intensities travel with their channel
    assert e.intensity[-1] == s.intensity[0]
    assert dict(e.meta) == {"sample": "a"}


def test_resample_hand_value():
    lams = np.array([619.920990] + [620.0 + k for k in range(7)])
    intens = np.array([5.0] + [1.0] * 7)
    e = resample_to_energy(_nm_spectrum(lams, intens))
    assert e.axis[-1] == pytest.approx(2.0, abs=5e-7)
    assert e.intensity[-1] == 5.0


def test_resample_identity_and_raman_refused():
    s = Spectrum(np.linspace(1, 2, 10), np.ones(10))
    assert resample_to_energy(s) is s
    raman = Spectrum(np.linspace(1300, 1400, 10), np.ones(10), "wavenumber_per_cm")
    with pytest.raises(OutOfRange):
        resample_to_energy(raman)


@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=8, max_size=60))
def test_resample_preserves_count_and_intensities(intens):
    lams = np.linspace(600.0, 800.0, len(intens))
    e = resample_to_energy(_nm_spectrum(lams, intens))
    assert len(e) == len(intens)
    assert sorted(e.intensity.tolist()) == sorted(float(v) for v in intens)
    assert np.all(np.diff(e.axis) > 0)


def test_spectrum_invariants():
    with pytest.raises(ValueError):
        Spectrum(np.arange(5.0), np.ones(5))
    with pytest.raises(ValueError):
        Spectrum(np.arange(10.0)[::-1], np.ones(10))
    with pytest.raises(ValueError):
        Spectrum(np.arange(10.0), np.r_[np.ones(9), np.nan])
    s = Spectrum(np.arange(10.0), np.ones(10))
    with pytest.raises(ValueError):
        s.axis[0] = 3.0


def test_mean_with_ci_examples():
    st0 = mean_with_ci([1.68, 1.68, 1.68])
    assert st0.mean == pytest.approx(1.68) and st0.half_width_95 == 0.0
    st1 = mean_with_ci([1.0, 2.0])
    # t(1, 0.975) = 12.7062, s = 0.70711
    assert st1.mean == 1.5
    assert st1.half_width_95 == pytest.approx(12.7062 * 0.70711 / math.sqrt(2), rel=1e-4)
    single = mean_with_ci([3.0])
    assert single.n == 1 and single.half_width_95 == 0.0
    with pytest.raises(ValueError):
        mean_with_ci([])


def test_mean_with_ci_bundled_clusters():
    stat = mean_with_ci(datasets.load_clusters())
    assert stat.n == 7
    # reported statistical error of the SiV mean: about 2.5 meV at 95 %
    assert 1.0e-3 < stat.half_width_95 < 5.0e-3


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=12), st.randoms())
def test_mean_with_ci_permutation_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    a, b = mean_with_ci(values), mean_with_ci(shuffled)
    assert a.mean == b.mean
    assert a.half_width_95 == pytest.approx(b.half_width_95, rel=1e-12, abs=1e-15)


def test_half_width_scales_inverse_sqrt_n():
    from scipy import stats

    ratios = []
    for n in (4, 16, 64):
        raw = np.random.default_rng(n).standard_normal(n)
        data = (raw - raw.mean()) / raw.std(ddof=1)  # sample variance exactly 1
        hw = mean_with_ci(data).half_width_95
        ratios.append(hw * math.sqrt(n) / stats.t.ppf(0.975, n - 1))
    assert ratios == pytest.approx([1.0, 1.0, 1.0], rel=1e-12)


def _analytic(x, peaks, baseline):
    total = np.full_like(x, baseline)
    for c, w, a in peaks:
        total += a / (1.0 + (2.0 * (x - c) / w) ** 2)
    return total


def test_synth_peak_maximum():
    s = synth_spectrum([LorentzianParams(1.68, 0.02, 1000.0)], 0.0, 0.0, 0, (1.58, 1.78, 201))
    i = int(np.argmin(np.abs(s.axis - 1.68)))
    assert s.intensity[i] == pytest.approx(1000.0, rel=1e-12)
    assert s.axis_unit == "electronvolt"


def test_synth_deterministic():
    args = ([LorentzianParams(1.68, 0.02, 1000.0)], 0.0, 5.0, 42, (1.58, 1.78, 201))
    a, b = synth_spectrum(*args), synth_spectrum(*args)
    assert a.intensity.tobytes() == b.intensity.tobytes()
    c = synth_spectrum(*args[:3], 43, args[4])
    assert not np.array_equal(a.intensity, c.intensity)


def test_synth_doublet_local_maxima():
    grid = (2.2, 2.44, 481)
    s = synth_spectrum([LorentzianParams(2.30, 0.02, 1000.0), LorentzianParams(2.34, 0.02, 1000.0)], 0, 0, 0, grid)
    y = s.intensity
    maxima = [s.axis[i] for i in range(1, len(y) - 1) if y[i] > y[i - 1] and y[i] > y[i + 1]]
    step = (grid[1] - grid[0]) / (grid[2] - 1)
    assert len(maxima) == 2
    assert abs(maxima[0] - 2.30) <= step and abs(maxima[1] - 2.34) <= step


@settings(max_examples=50)
@given(
    c=st.floats(1.5, 2.5), w=st.floats(0.002, 0.1), a=st.floats(1, 1e5), b=st.floats(-100, 100),
)
def test_synth_noiseless_matches_analytic(c, w, a, b):
    s = synth_spectrum([LorentzianParams(c, w, a)], b, 0.0, 0, (c - 0.3, c + 0.3, 301))
    expected = _analytic(s.axis, [(c, w, a)], b)
    np.testing.assert_allclose(s.intensity, expected, rtol=1e-12, atol=1e-12 * (a + abs(b)))


def test_synth_errors():
    p = [LorentzianParams(1.68, 0.02, 1.0)]
    with pytest.raises(ValueError):
        synth_spectrum(p, grid=(2.0, 1.0, 100))
    with pytest.raises(ValueError):
        synth_spectrum(p, grid=(1.0, 2.0, 5))
    with pytest.raises(ValueError):
        synth_spectrum(p, noise_sigma=-1.0)


def test_spectrum_file_round_trip(tmp_path):
    s = synth_spectrum([LorentzianParams(1.68, 0.02, 1000.0)], 3.0, 5.0, 9, (1.6, 1.76, 97), {"pressure_gpa": "12"})
    path = tmp_path / "s.csv"
    write_spectrum(s, path)
    back = read_spectrum(path)
    assert back == s
    assert back.meta["pressure_gpa"] == "12"


def test_spectrum_parse_errors(tmp_path):
    with pytest.raises(ParseError):
        parse_spectrum("1,2\n" * 10)  # no axis_unit
    with pytest.raises(ParseError):
        parse_spectrum("")
    with pytest.raises(ParseError):
        parse_spectrum("# axis_unit=nanometer\n1,2,3\n")
    with pytest.raises(ParseError):
        read_spectrum(tmp_path / "missing.csv")
