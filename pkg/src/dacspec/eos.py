"""Vinet equation of state for diamond.

Pressure as a function of the lattice parameter ratio x = a/a0::

    P(x) = 3 B0 (1 - x) / x² · exp[3/2 (B0' - 1)(1 - x)]

and its inverse by bracketed root finding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import OutOfRange

X_MIN, X_MAX = 0.7, 1.05
P_MAX = 600.0
# numerically negative pressures above this are read as zero
P_NEG_TOL = -1e-6


@dataclass(frozen=True)
class EosParams:
    a0: float  # Å
    b0: float  # GPa
    b0_prime: float
    label: str = ""

    def __post_init__(self):
        if not (self.a0 > 0 and self.b0 > 0):
            raise ValueError("a0 and b0 must be positive")
        if not (self.b0_prime > 1):
            raise ValueError("b0_prime must exceed 1")


@dataclass(frozen=True)
class LatticeState:
    x: float
    pressure: float


# B0' = 3.0 for both sets; the printed values are a0 and B0 only
THEORY = EosParams(a0=3.554, b0=460.0, b0_prime=3.0, label="theory")
EXPERIMENT = EosParams(a0=3.555, b0=446.0, b0_prime=3.0, label="experiment")
PRESETS = {"theory": THEORY, "experiment": EXPERIMENT}


def _vinet(x, params: EosParams):
    eta = 1.5 * (params.b0_prime - 1.0)
    return 3.0 * params.b0 * (1.0 - x) / (x * x) * np.exp(eta * (1.0 - x))


def vinet_pressure(x, params: EosParams = EXPERIMENT):
    """Pressure in GPa at lattice ratio ``x`` (scalar or array) in [0.7, 1.05]."""
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < X_MIN) or np.any(arr > X_MAX):
        raise OutOfRange(f"lattice ratio outside the validity window [{X_MIN}, {X_MAX}]")
    p = _vinet(arr, params)
    return float(p) if p.ndim == 0 else p


def lattice_ratio_from_pressure(p: float, params: EosParams = EXPERIMENT) -> float:
    """Unique x in [0.7, 1] with ``vinet_pressure(x) == p``."""
    p = float(p)
    if not np.isfinite(p) or p < P_NEG_TOL or p > P_MAX:
        raise OutOfRange(f"pressure {p} GPa outside [0, {P_MAX}]")
    if p <= 0.0:
        return 1.0
    return brentq(lambda x: _vinet(x, params) - p, X_MIN, 1.0, xtol=1e-15, rtol=1e-15, maxiter=200)


def state_from_pressure(p: float, params: EosParams = EXPERIMENT) -> LatticeState:
    return LatticeState(lattice_ratio_from_pressure(p, params), max(float(p), 0.0))


def state_from_ratio(x: float, params: EosParams = EXPERIMENT) -> LatticeState:
    return LatticeState(float(x), vinet_pressure(x, params))
