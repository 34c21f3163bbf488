import math

import numpy as np
import pytest

from dacspec.documents import eos_to_text, read_eos
from dacspec.eos import (
    EXPERIMENT,
    THEORY,
    EosParams,
    lattice_ratio_from_pressure,
    vinet_pressure,
)
from dacspec.errors import OutOfRange

B3 = EosParams(3.555, 446.0, 3.0, "experiment")


def _vinet_by_hand(x, b0, bp):
    return 3 * b0 * (1 - x) / x**2 * math.exp(1.5 * (bp - 1) * (1 - x))


def _bisect(target, b0=446.0, bp=3.0):
    lo, hi = 0.7, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _vinet_by_hand(mid, b0, bp) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_presets():
    assert (THEORY.a0, THEORY.b0) == (3.554, 460.0)
    assert (EXPERIMENT.a0, EXPERIMENT.b0, EXPERIMENT.b0_prime) == (3.555, 446.0, 3.0)


def test_forward_examples():
    assert vinet_pressure(1.0, B3) == 0.0
    assert vinet_pressure(0.95, B3) == pytest.approx(86.12, abs=0.005)
    assert vinet_pressure(0.95, B3) == pytest.approx(_vinet_by_hand(0.95, 446, 3.0), rel=1e-14)
    assert vinet_pressure(0.9135, B3) == pytest.approx(180.0, abs=1.0)


def test_inverse_examples():
    assert lattice_ratio_from_pressure(0.0, B3) == 1.0
    p = vinet_pressure(0.95, B3)
    assert lattice_ratio_from_pressure(p, B3) == pytest.approx(0.95, abs=1e-8)
    x180 = lattice_ratio_from_pressure(180.0, B3)
    assert x180 == pytest.approx(_bisect(180.0), abs=1e-12)
    assert x180 == pytest.approx(0.9135, abs=1e-3)
    assert abs(vinet_pressure(x180, B3) - 180.0) < 1e-10


def test_round_trip_grid():
    xs = np.linspace(0.85, 1.0, 1000)
    back = np.array([lattice_ratio_from_pressure(p, B3) for p in vinet_pressure(xs, B3)])
    assert np.max(np.abs(back - xs)) < 1e-9


def test_strictly_decreasing():
    xs = np.linspace(0.7, 1.05, 5000)
    assert np.all(np.diff(vinet_pressure(xs, B3)) < 0)


def test_bulk_modulus_consistency():
    h = 1e-6
    slope = (vinet_pressure(1 - h, B3) - vinet_pressure(1 + h, B3)) / (2 * h)
    assert slope == pytest.approx(3 * B3.b0, rel=5e-3)


def test_b0_factorization():
    a = EosParams(3.555, 460.0, 3.0)
    xs = np.linspace(0.8, 0.99, 50)
    np.testing.assert_allclose(vinet_pressure(xs, a) / vinet_pressure(xs, B3), 460 / 446, rtol=1e-13)


def test_validity_window():
    with pytest.raises(OutOfRange):
        vinet_pressure(0.69, B3)
    with pytest.raises(OutOfRange):
        vinet_pressure(1.06, B3)
    with pytest.raises(OutOfRange):
        lattice_ratio_from_pressure(-1.0, B3)
    with pytest.raises(OutOfRange):
        lattice_ratio_from_pressure(601.0, B3)
    # tiny negative values from numerical noise are read as zero
    assert lattice_ratio_from_pressure(-5e-7, B3) == 1.0


def test_param_validation():
    with pytest.raises(ValueError):
        EosParams(3.5, 446.0, 1.0)
    with pytest.raises(ValueError):
        EosParams(-1.0, 446.0, 3.0)


def test_eos_document_round_trip(tmp_path):
    path = tmp_path / "eos.txt"
    path.write_text(eos_to_text(THEORY))
    assert read_eos(path) == THEORY
    text = path.read_text()
    assert "b0_prime" in text
    path.write_text(text.replace("b0_prime", "# b0_prime"))
    with pytest.raises(ValueError):
        read_eos(path)
