"""ZPL-versus-pressure calibrations and level-shift transforms.

Calibration curves are monotone piecewise-cubic Hermite interpolants
(Fritsch-Carlson) through measured (pressure, energy) points, so they can be
inverted unambiguously. The module also carries the straight-line slope fit
used for low-pressure shift rates, the constant-offset alignment of theory
curves, and the Kohn-Sham level transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DuplicatePressure,
    ExtrapolationRefused,
    NonMonotone,
    TooFewPoints,
)

SPECIES = ("SiV", "GeV", "SnV")

# zero-pressure ZPL energies in eV: measured, and from total-energy differences
ZPL0_MEASURED = {"SiV": 1.68, "GeV": 2.06, "SnV": 2.00}
ZPL0_COMPUTED = {"SiV": 1.57, "GeV": 2.00, "SnV": 1.98}


def normalize_species(name: str) -> str:
    for sp in SPECIES:
        if name.strip().lower() == sp.lower():
            return sp
    raise ValueError(f"unknown species {name!r}; expected one of {SPECIES}")


@dataclass(frozen=True)
class CalibrationPoint:
    pressure: float
    pressure_sigma: float
    energy: float
    energy_sigma: float

    def __post_init__(self):
        if self.pressure < 0:
            raise ValueError("pressure must be non-negative")
        if self.pressure_sigma < 0 or self.energy_sigma < 0:
            raise ValueError("sigmas must be non-negative")


class MonotoneCubic:
    """Fritsch-Carlson monotone piecewise-cubic Hermite interpolant."""

    def __init__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        h = np.diff(x)
        delta = np.diff(y) / h
        m = np.empty_like(y)
        m[0] = delta[0]
        m[-1] = delta[-1]
        m[1:-1] = 0.5 * (delta[:-1] + delta[1:])
        # flat or sign-changing secants pin the node slope to zero
        m[1:-1][delta[:-1] * delta[1:] <= 0] = 0.0
        for k in range(delta.size):
            if delta[k] == 0:
                m[k] = m[k + 1] = 0.0
                continue
            a = m[k] / delta[k]
            b = m[k + 1] / delta[k]
            r2 = a * a + b * b
            if r2 > 9.0:
                tau = 3.0 / math.sqrt(r2)
                m[k] = tau * a * delta[k]
                m[k + 1] = tau * b * delta[k]
        self.x, self.y, self.m = x, y, m
        for arr in (self.x, self.y, self.m):
            arr.setflags(write=False)

    def _locate(self, xq):
        k = np.clip(np.searchsorted(self.x, xq, side="right") - 1, 0, self.x.size - 2)
        h = self.x[k + 1] - self.x[k]
        t = (xq - self.x[k]) / h
        return k, h, t

    def __call__(self, xq):
        xq = np.asarray(xq, dtype=float)
        k, h, t = self._locate(xq)
        t2, t3 = t * t, t * t * t
        out = (
            (2 * t3 - 3 * t2 + 1) * self.y[k]
            + (t3 - 2 * t2 + t) * h * self.m[k]
            + (-2 * t3 + 3 * t2) * self.y[k + 1]
            + (t3 - t2) * h * self.m[k + 1]
        )
        return float(out) if out.ndim == 0 else out

    def derivative(self, xq):
        xq = np.asarray(xq, dtype=float)
        k, h, t = self._locate(xq)
        t2 = t * t
        out = (
            (6 * t2 - 6 * t) * self.y[k] / h
            + (3 * t2 - 4 * t + 1) * self.m[k]
            + (-6 * t2 + 6 * t) * self.y[k + 1] / h
            + (3 * t2 - 2 * t) * self.m[k + 1]
        )
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class GaugeCalibration:
    species: str
    points: tuple[CalibrationPoint, ...]
    interpolant: MonotoneCubic
    range: tuple[float, float]
    zpl0: float
    zpl0_extrapolated: bool = False
    mask_below: float | None = None
    excluded: tuple[CalibrationPoint, ...] = field(default=())

    @property
    def all_points(self) -> tuple[CalibrationPoint, ...]:
        return tuple(sorted(self.points + self.excluded, key=lambda p: p.pressure))

    @property
    def energy_range(self) -> tuple[float, float]:
        return self.points[0].energy, self.points[-1].energy

    def sigma_at(self, p: float) -> tuple[float, float]:
        """(pressure_sigma, energy_sigma) linearly interpolated between nodes."""
        ps = [q.pressure for q in self.points]
        return (
            float(np.interp(p, ps, [q.pressure_sigma for q in self.points])),
            float(np.interp(p, ps, [q.energy_sigma for q in self.points])),
        )


def build_calibration(species: str, points: Sequence[CalibrationPoint], mask_below: float | None = None) -> GaugeCalibration:
    """Monotone calibration curve through ``points``.

    Points below ``mask_below`` GPa are kept on record but left out of the
    curve. Construction fails instead of producing a curve that is not
    strictly increasing in pressure.
    """
    species = normalize_species(species)
    pts = sorted(points, key=lambda p: p.pressure)
    excluded: list[CalibrationPoint] = []
    if mask_below is not None:
        excluded = [p for p in pts if p.pressure < mask_below]
        pts = [p for p in pts if p.pressure >= mask_below]
    if len(pts) < 3:
        raise TooFewPoints(f"a calibration needs at least 3 points, got {len(pts)}")
    P = np.array([p.pressure for p in pts])
    E = np.array([p.energy for p in pts])
    if np.any(np.diff(P) == 0):
        dup = P[1:][np.diff(P) == 0][0]
        raise DuplicatePressure(f"pressure {dup} GPa appears more than once")
    bad = np.flatnonzero(np.diff(E) <= 0)
    if bad.size:
        k = int(bad[0])
        raise NonMonotone(
            f"energy does not increase between {P[k]:g} and {P[k + 1]:g} GPa"
        )
    interp = MonotoneCubic(P, E)
    if P[0] <= 0.0:
        zpl0, extrapolated = float(interp(0.0)), False
    else:
        zpl0, extrapolated = float(E[0]), True
    return GaugeCalibration(
        species=species,
        points=tuple(pts),
        interpolant=interp,
        range=(float(P[0]), float(P[-1])),
        zpl0=zpl0,
        zpl0_extrapolated=extrapolated,
        mask_below=mask_below,
        excluded=tuple(excluded),
    )


def eval_calibration(cal: GaugeCalibration, p):
    """ZPL energy (eV) at pressure ``p``; refuses to extrapolate."""
    arr = np.asarray(p, dtype=float)
    lo, hi = cal.range
    if np.any(~(arr >= lo)) or np.any(~(arr <= hi)):
        raise ExtrapolationRefused(f"pressure outside calibrated range [{lo:g}, {hi:g}] GPa")
    return cal.interpolant(arr)


def linear_slope(points: Sequence[CalibrationPoint], window: tuple[float, float]) -> tuple[float, float]:
    """OLS slope in meV/GPa over the closed pressure window, with its standard error.

    With exactly two points the fit is exact and the standard error is 0.
    """
    lo, hi = window
    sel = [p for p in points if lo <= p.pressure <= hi]
    if len(sel) < 2:
        raise TooFewPoints(f"need at least 2 points in [{lo:g}, {hi:g}] GPa, got {len(sel)}")
    P = np.array([p.pressure for p in sel])
    E = np.array([p.energy for p in sel]) * 1000.0
    dp = P - P.mean()
    sxx = float(dp @ dp)
    if sxx == 0:
        raise DuplicatePressure("all window points share one pressure")
    slope = float(dp @ (E - E.mean())) / sxx
    if len(sel) == 2:
        return slope, 0.0
    resid = E - (E.mean() + slope * dp)
    s2 = float(resid @ resid) / (len(sel) - 2)
    return slope, math.sqrt(s2 / sxx)


def align_theory(theory: Sequence[tuple[float, float]], zpl0_exp: float) -> list[tuple[float, float]]:
    """Shift a computed (P, E) curve by a constant so that E(0) equals ``zpl0_exp``."""
    at_zero = [e for p, e in theory if p == 0]
    if not at_zero:
        raise ValueError("theory curve has no 0 GPa entry")
    offset = zpl0_exp - at_zero[0]
    return [(p, e + offset) for p, e in theory]


def theory_offset(theory: Sequence[tuple[float, float]], zpl0_exp: float) -> float:
    at_zero = [e for p, e in theory if p == 0]
    if not at_zero:
        raise ValueError("theory curve has no 0 GPa entry")
    return zpl0_exp - at_zero[0]


@dataclass(frozen=True, eq=False)
class LevelTrace:
    """Kohn-Sham single-particle levels (eV) tabulated against pressure (GPa)."""

    pressure_grid: np.ndarray
    eps_eu: np.ndarray
    eps_eg: np.ndarray
    eps_vbm: np.ndarray
    eps_cbm: np.ndarray | None = None
    species: str = "SiV"

    def __post_init__(self):
        cols = {
            "pressure_grid": self.pressure_grid,
            "eps_eu": self.eps_eu,
            "eps_eg": self.eps_eg,
            "eps_vbm": self.eps_vbm,
        }
        if self.eps_cbm is not None:
            cols["eps_cbm"] = self.eps_cbm
        n = None
        for name, val in cols.items():
            arr = np.array(val, dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            n = arr.size if n is None else n
            if arr.size != n:
                raise ValueError("all level columns must have equal length")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if n < 2:
            raise ValueError("a level trace needs at least two pressures")
        if np.any(np.diff(self.pressure_grid) <= 0):
            raise ValueError("pressure grid must be strictly increasing")
        if not np.any(self.pressure_grid == 0):
            raise ValueError("pressure grid must include 0 GPa")
        object.__setattr__(self, "species", normalize_species(self.species))

    @property
    def zero_index(self) -> int:
        return int(np.flatnonzero(self.pressure_grid == 0)[0])


def vbm_referenced_shift(trace: LevelTrace, level: str) -> list[tuple[float, float]]:
    """Change of a level relative to the VBM, zeroed at 0 GPa."""
    columns = {"eu": trace.eps_eu, "eg": trace.eps_eg, "cbm": trace.eps_cbm}
    if level not in columns:
        raise ValueError(f"unknown level {level!r}")
    eps = columns[level]
    if eps is None:
        raise ValueError(f"level {level!r} is not present in this trace")
    rel = eps - trace.eps_vbm
    i0 = trace.zero_index
    d = rel - rel[i0]
    return list(zip(trace.pressure_grid.tolist(), d.tolist()))


def ks_zpl_shift(trace: LevelTrace) -> list[tuple[float, float]]:
    """Relative e_g - e_u gap change, zeroed at 0 GPa."""
    gap = trace.eps_eg - trace.eps_eu
    d = gap - gap[trace.zero_index]
    return list(zip(trace.pressure_grid.tolist(), d.tolist()))
