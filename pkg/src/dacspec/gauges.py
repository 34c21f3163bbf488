"""Pressure gauges: ruby R1 fluorescence, diamond Raman edge, and ZPL.

Scale coefficients are configuration (:class:`ScaleCoefficients`); the
defaults are the ruby scale λ0 = 694.25 nm, A = 1870 GPa, B = 5.63 and the
Raman-edge scale ν0 = 1334 cm⁻¹, K0 = 547 GPa, K0' = 3.75.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.optimize import brentq

from .calib import GaugeCalibration
from .errors import ExtrapolationRefused, OutOfRange

GAUGE_IDS = ("ruby", "raman_edge", "zpl_siv", "zpl_gev", "zpl_snv", "combined")

RUBY_SIGMA = 1.0  # GPa
RAMAN_SIGMA = 8.0  # GPa
RUBY_MIN_PRESSURE = -0.5


@dataclass(frozen=True)
class PressureEstimate:
    value: float  # GPa
    sigma: float  # GPa
    gauge_id: str
    source_feature: float | None = None
    feature_unit: str = ""
    sources: tuple[str, ...] = ()

    def __post_init__(self):
        if self.gauge_id not in GAUGE_IDS:
            raise ValueError(f"unknown gauge id {self.gauge_id!r}")
        if not (self.sigma >= 0):
            raise ValueError("sigma must be non-negative")


@dataclass(frozen=True)
class ScaleCoefficients:
    ruby_lambda0: float = 694.25
    ruby_A: float = 1870.0
    ruby_B: float = 5.63
    raman_nu0: float = 1334.0
    raman_K0: float = 547.0
    raman_K0_prime: float = 3.75

    def __post_init__(self):
        for name in ("ruby_lambda0", "ruby_A", "raman_nu0", "raman_K0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_SCALES = ScaleCoefficients()


def _quadrature(*terms: float) -> float:
    return math.sqrt(sum(t * t for t in terms))


def ruby_pressure(lam: float, coeffs: ScaleCoefficients = DEFAULT_SCALES, fit_sigma: float = 0.0) -> PressureEstimate:
    """Pressure from the ruby R1 line wavelength in nm.

    ``fit_sigma`` (GPa) is added in quadrature to the fixed 1 GPa floor.
    """
    l0 = coeffs.ruby_lambda0
    if not (l0 - 1.0 <= lam <= l0 + 40.0):
        raise OutOfRange(f"ruby wavelength {lam} nm outside [{l0 - 1:g}, {l0 + 40:g}] nm")
    d = (lam - l0) / l0
    p = coeffs.ruby_A * d * (1.0 + coeffs.ruby_B * d)
    if p < RUBY_MIN_PRESSURE:
        raise OutOfRange(f"ruby scale gives {p:.3f} GPa, below {RUBY_MIN_PRESSURE} GPa")
    return PressureEstimate(p, _quadrature(RUBY_SIGMA, fit_sigma), "ruby", lam, "nm")


def raman_edge_pressure(nu: float, coeffs: ScaleCoefficients = DEFAULT_SCALES, fit_sigma: float = 0.0) -> PressureEstimate:
    """Pressure from the high-frequency edge of the anvil's Raman band (cm⁻¹)."""
    nu0 = coeffs.raman_nu0
    if not (nu >= nu0 - 5.0):
        raise OutOfRange(f"Raman edge {nu} cm-1 below {nu0 - 5:g} cm-1")
    rho = (nu - nu0) / nu0
    p = coeffs.raman_K0 * rho * (1.0 + 0.5 * (coeffs.raman_K0_prime - 1.0) * rho)
    return PressureEstimate(p, _quadrature(RAMAN_SIGMA, fit_sigma), "raman_edge", nu, "cm-1")


def zpl_pressure(e: float, cal: GaugeCalibration, e_sigma: float = 0.0) -> PressureEstimate:
    """Invert a ZPL calibration at energy ``e`` (eV).

    The uncertainty combines the calibration's pressure error at that point
    with its energy error (plus ``e_sigma``) mapped through the local slope.
    """
    e_lo, e_hi = cal.energy_range
    if not (e_lo <= e <= e_hi):
        raise ExtrapolationRefused(
            f"{e} eV outside the {cal.species} calibration [{e_lo:.6g}, {e_hi:.6g}] eV"
        )
    p_lo, p_hi = cal.range
    f = cal.interpolant
    if e == e_lo:
        p = p_lo
    elif e == e_hi:
        p = p_hi
    else:
        p = brentq(lambda q: f(q) - e, p_lo, p_hi, xtol=1e-13, rtol=1e-15, maxiter=200)
    slope = abs(f.derivative(p))
    ps, es = cal.sigma_at(p)
    energy_term = _quadrature(es, e_sigma) / slope if slope > 0 else math.inf
    gauge = "zpl_" + cal.species.lower()
    return PressureEstimate(float(p), _quadrature(ps, energy_term), gauge, e, "eV")


def combine_gauges(estimates: Sequence[PressureEstimate]) -> PressureEstimate:
    """Inverse-variance weighted mean of independent pressure estimates."""
    if not estimates:
        raise ValueError("combine_gauges needs at least one estimate")
    if any(not (est.sigma > 0) for est in estimates):
        raise ValueError("every estimate needs a positive sigma to be weighted")
    if len(estimates) == 1:
        return estimates[0]
    w = [1.0 / (est.sigma * est.sigma) for est in estimates]
    wsum = math.fsum(w)
    value = math.fsum(wi * est.value for wi, est in zip(w, estimates)) / wsum
    lo = min(est.value for est in estimates)
    hi = max(est.value for est in estimates)
    value = min(max(value, lo), hi)  # rounding guard
    return PressureEstimate(
        value,
        1.0 / math.sqrt(wsum),
        "combined",
        sources=tuple(est.gauge_id for est in estimates),
    )

