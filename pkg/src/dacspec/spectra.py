"""Spectral data types, energy units, repeated-measurement statistics and
a deterministic synthetic-spectrum generator.

Energies are carried in eV internally. Wavelengths convert through
hc = 1239.84198 eV nm and frequencies through h = 4.135667696 meV/THz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import OutOfRange, ParseError

HC_EV_NM = 1239.84198
H_MEV_PER_THZ = 4.135667696

AXIS_UNITS = ("nanometer", "electronvolt", "wavenumber_per_cm")
ENERGY_UNITS = ("eV", "meV", "THz", "nm")

MIN_POINTS = 8


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Sampled intensity trace on a strictly increasing axis."""

    axis: np.ndarray
    intensity: np.ndarray
    axis_unit: str = "electronvolt"
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        axis = _frozen(self.axis)
        intensity = _frozen(self.intensity)
        if self.axis_unit not in AXIS_UNITS:
            raise ValueError(f"unknown axis unit {self.axis_unit!r}")
        if axis.ndim != 1 or axis.shape != intensity.shape:
            raise ValueError("axis and intensity must be 1-d arrays of equal length")
        if axis.size < MIN_POINTS:
            raise ValueError(f"a spectrum needs at least {MIN_POINTS} points, got {axis.size}")
        if not (np.all(np.isfinite(axis)) and np.all(np.isfinite(intensity))):
            raise ValueError("axis and intensity must be finite")
        if np.any(np.diff(axis) <= 0):
            raise ValueError("axis must be strictly increasing")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "intensity", intensity)
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    def __len__(self):
        return self.axis.size

    @property
    def points(self):
        return list(zip(self.axis.tolist(), self.intensity.tolist()))

    def __eq__(self, other):
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (
            self.axis_unit == other.axis_unit
            and dict(self.meta) == dict(other.meta)
            and np.array_equal(self.axis, other.axis)
            and np.array_equal(self.intensity, other.intensity)
        )

    __hash__ = None


@dataclass(frozen=True)
class EnergyQuantity:
    value: float
    unit: str = "eV"

    def __post_init__(self):
        if self.unit not in ENERGY_UNITS:
            raise ValueError(f"unknown energy unit {self.unit!r}")
        if not math.isfinite(self.value):
            raise ValueError("energy value must be finite")
        if self.unit == "nm" and self.value <= 0:
            raise OutOfRange("wavelength must be positive")


@dataclass(frozen=True)
class MeasurementStat:
    """Mean of repeated measurements with its 95 % confidence half-width."""

    mean: float
    half_width_95: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.half_width_95 < 0:
            raise ValueError("half_width_95 must be non-negative")
        if self.n == 1 and self.half_width_95 != 0:
            raise ValueError("a single measurement carries no dispersion estimate")


def _to_ev(value: float, unit: str) -> float:
    if unit == "eV":
        return value
    if unit == "meV":
        return value / 1000.0
    if unit == "THz":
        return value * H_MEV_PER_THZ / 1000.0
    # nm
    return HC_EV_NM / value


def _from_ev(ev: float, unit: str) -> float:
    if unit == "eV":
        return ev
    if unit == "meV":
        return ev * 1000.0
    if unit == "THz":
        return ev * 1000.0 / H_MEV_PER_THZ
    if ev <= 0:
        raise OutOfRange("only positive energies have a wavelength")
    return HC_EV_NM / ev


def convert_energy(q: EnergyQuantity, target_unit: str) -> EnergyQuantity:
    """Express ``q`` in ``target_unit``.

    >>> round(convert_energy(EnergyQuantity(17.0, "THz"), "meV").value, 2)
    70.31
    """
    if target_unit not in ENERGY_UNITS:
        raise ValueError(f"unknown energy unit {target_unit!r}")
    if q.unit == target_unit:
        return q
    if {q.unit, target_unit} == {"eV", "meV"}:
        # avoid the detour through eV-as-reciprocal for the trivial case
        factor = 1000.0 if target_unit == "meV" else 1e-3
        return EnergyQuantity(q.value * factor, target_unit)
    return EnergyQuantity(_from_ev(_to_ev(q.value, q.unit), target_unit), target_unit)


def resample_to_energy(s: Spectrum) -> Spectrum:
    """Map a wavelength spectrum onto an increasing eV axis.

    Intensities are carried over per channel; the dλ/dE Jacobian is not
    applied (it leaves line centers practically unchanged at these widths).
    """
    if s.axis_unit == "electronvolt":
        return s
    if s.axis_unit != "nanometer":
        raise OutOfRange(f"cannot resample a {s.axis_unit} axis to energy")
    if np.any(s.axis <= 0):
        raise OutOfRange("wavelengths must be positive")
    energy = HC_EV_NM / s.axis[::-1]
    return Spectrum(energy, s.intensity[::-1], "electronvolt", s.meta)


def mean_with_ci(values: Iterable[float], level: float = 0.95) -> MeasurementStat:
    """Arithmetic mean with a Student-t confidence half-width."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("mean_with_ci needs at least one value")
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must be finite")
    # math.fsum keeps the mean independent of input order
    mean = math.fsum(arr) / arr.size
    if arr.size == 1:
        return MeasurementStat(mean, 0.0, 1)
    dev = arr - mean
    sd = math.sqrt(math.fsum(dev * dev) / (arr.size - 1))
    t = stats.t.ppf(0.5 + level / 2.0, arr.size - 1)
    return MeasurementStat(mean, float(t * sd / math.sqrt(arr.size)), int(arr.size))


def lorentzian_sum(x, peaks, baseline: float = 0.0) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.full_like(x, float(baseline))
    for p in peaks:
        hw2 = (0.5 * p.fwhm) ** 2
        out = out + p.amplitude * hw2 / ((x - p.center) ** 2 + hw2)
    return out


def synth_spectrum(
    peaks: Sequence,
    baseline: float = 0.0,
    noise_sigma: float = 0.0,
    seed: int = 0,
    grid: tuple[float, float, int] = (1.5, 1.9, 401),
    meta: Mapping[str, str] | None = None,
) -> Spectrum:
    """Lorentzian peaks on a constant baseline plus seeded Gaussian noise.

    ``peaks`` holds objects with ``center``, ``fwhm`` and ``amplitude``
    attributes. Noise comes from a Philox counter-based generator, so a
    given seed yields bit-identical output on every platform numpy supports.
    """
    lo, hi, n = grid
    n = int(n)
    if not (lo < hi) or n < MIN_POINTS:
        raise ValueError(f"invalid grid {grid!r}")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    for p in peaks:
        if p.fwhm <= 0:
            raise ValueError("peak fwhm must be positive")
    x = np.linspace(lo, hi, n)
    y = lorentzian_sum(x, peaks, baseline)
    if noise_sigma > 0:
        rng = np.random.Generator(np.random.Philox(seed))
        y = y + noise_sigma * rng.standard_normal(n)
    info = {"generator": "synth", "seed": str(seed)}
    info.update(meta or {})
    return Spectrum(x, y, "electronvolt", info)


# --- CSV file format --------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_spectrum(s: Spectrum, path) -> None:
    lines = [f"# axis_unit={s.axis_unit}"]
    for key in sorted(s.meta):
        if key == "axis_unit":
            continue
        lines.append(f"# {key}={s.meta[key]}")
    lines.append("axis,intensity")
    lines.extend(f"{_fmt(a)},{_fmt(i)}" for a, i in zip(s.axis, s.intensity))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_spectrum(text: str, source: str = "<string>") -> Spectrum:
    meta: dict[str, str] = {}
    axis, intensity = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        cells = [c.strip() for c in line.split(",")]
        if cells[:2] == ["axis", "intensity"]:
            continue
        if len(cells) != 2:
            raise ParseError(f"{source}:{lineno}: expected two columns, got {len(cells)}")
        try:
            axis.append(float(cells[0]))
            intensity.append(float(cells[1]))
        except ValueError as exc:
            raise ParseError(f"{source}:{lineno}: {exc}") from None
    unit = meta.pop("axis_unit", None)
    if unit is None:
        raise ParseError(f"{source}: missing mandatory '# axis_unit=' header")
    try:
        return Spectrum(axis, intensity, unit, meta)
    except ValueError as exc:
        raise ParseError(f"{source}: {exc}") from None


def read_spectrum(path) -> Spectrum:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    return parse_spectrum(text, str(path))
