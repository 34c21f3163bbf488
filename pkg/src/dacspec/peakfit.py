"""Lorentzian line fitting.

A Levenberg-Marquardt least-squares solver with analytic Jacobians fits one
or two Lorentzian lines on a constant baseline. Widths and amplitudes are
optimized as logarithms so they stay positive without explicit bounds.
``select_model`` decides between one and two lines by BIC.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import NoPeak, NotConverged, SingularFit
from .spectra import MeasurementStat, Spectrum

log = logging.getLogger(__name__)

MAX_ITER = 200
COST_RTOL = 1e-10
GRAD_TOL = 1e-8
LAMBDA0 = 1e-3
LAMBDA_DOWN = 0.3
LAMBDA_UP = 2.0
BIC_MARGIN = 10.0
# condition number limit of the column-equilibrated normal matrix
COND_LIMIT = 1e13


@dataclass(frozen=True)
class LorentzianParams:
    center: float
    fwhm: float
    amplitude: float

    def __post_init__(self):
        if not (self.fwhm > 0):
            raise ValueError("fwhm must be positive")
        if not (self.amplitude > 0):
            raise ValueError("amplitude must be positive")


@dataclass(frozen=True, eq=False)
class FitResult:
    """Outcome of a least-squares line fit.

    Covariance rows/columns follow ``param_names``: ``center_k, fwhm_k,
    amplitude_k`` for each peak in ascending center order, then ``baseline``.
    """

    peaks: tuple[LorentzianParams, ...]
    baseline: float
    covariance: np.ndarray
    residual_rms: float
    n_iterations: int
    converged: bool
    n_points: int = 0

    def __post_init__(self):
        cov = np.array(self.covariance, dtype=float)
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "peaks", tuple(self.peaks))

    @property
    def n_peaks(self) -> int:
        return len(self.peaks)

    @property
    def n_params(self) -> int:
        return 3 * len(self.peaks) + 1

    @property
    def param_names(self) -> list[str]:
        names = []
        for k in range(1, self.n_peaks + 1):
            names += [f"center_{k}", f"fwhm_{k}", f"amplitude_{k}"]
        return names + ["baseline"]

    @property
    def rss(self) -> float:
        return self.residual_rms**2 * self.n_points

    def stderr(self, name: str) -> float:
        i = self.param_names.index(name)
        return math.sqrt(max(self.covariance[i, i], 0.0))


def lorentzian_eval(p: LorentzianParams, baseline: float, x):
    """``baseline + amplitude (Γ/2)² / ((x - center)² + (Γ/2)²)``."""
    hw2 = (0.5 * p.fwhm) ** 2
    return baseline + p.amplitude * hw2 / ((np.asarray(x, dtype=float) - p.center) ** 2 + hw2)


def model_eval(x, peaks: Sequence[LorentzianParams], baseline: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.full_like(x, float(baseline))
    for p in peaks:
        y += lorentzian_eval(p, 0.0, x)
    return y


def model_jacobian(x, peaks: Sequence[LorentzianParams], baseline: float = 0.0) -> np.ndarray:
    """d model / d(center, fwhm, amplitude per peak..., baseline)."""
    x = np.asarray(x, dtype=float)
    J = np.empty((x.size, 3 * len(peaks) + 1))
    for k, p in enumerate(peaks):
        h = 0.5 * p.fwhm
        d = x - p.center
        den = d * d + h * h
        shape = h * h / den
        J[:, 3 * k] = 2.0 * p.amplitude * shape * d / den
        J[:, 3 * k + 1] = p.amplitude * h * d * d / (den * den)
        J[:, 3 * k + 2] = shape
    J[:, -1] = 1.0
    return J


# --- internal log-parametrization -----------------------------------------

def _pack(peaks, baseline) -> np.ndarray:
    u = []
    for p in peaks:
        u += [p.center, math.log(p.fwhm), math.log(p.amplitude)]
    return np.array(u + [baseline], dtype=float)


def _unpack(u: np.ndarray):
    n = (u.size - 1) // 3
    peaks = [
        LorentzianParams(float(u[3 * k]), math.exp(u[3 * k + 1]), math.exp(u[3 * k + 2]))
        for k in range(n)
    ]
    return peaks, float(u[-1])


def _model_and_jac(x, u):
    """Model values and Jacobian with respect to the log-parametrized vector."""
    n = (u.size - 1) // 3
    y = np.full_like(x, u[-1])
    J = np.empty((x.size, u.size))
    for k in range(n):
        c = u[3 * k]
        w = math.exp(u[3 * k + 1])
        a = math.exp(u[3 * k + 2])
        h = 0.5 * w
        d = x - c
        den = d * d + h * h
        shape = h * h / den
        y += a * shape
        J[:, 3 * k] = 2.0 * a * shape * d / den
        # chain rule: d/d(ln w) = w d/dw
        J[:, 3 * k + 1] = w * a * h * d * d / (den * den)
        J[:, 3 * k + 2] = a * shape
    J[:, -1] = 1.0
    return y, J


def _finite(u) -> bool:
    return bool(np.all(np.isfinite(u))) and bool(np.all(np.abs(u[1:-1:3]) < 700)) and bool(
        np.all(np.abs(u[2:-1:3]) < 700)
    )


def levenberg_marquardt(x, y, u0, max_iter: int = MAX_ITER):
    """Minimize Σ (y - model(u))² over the log-parametrized vector ``u``.

    Returns ``(u, n_iterations, converged)``. Damping follows Marquardt's
    diagonal scaling: start at 1e-3, x0.3 after an accepted step, x2 after a
    rejected one. Convergence needs two consecutive accepted steps that each
    show a relative cost decrease below 1e-10 or a gradient max-norm below
    1e-8.
    """
    u = np.array(u0, dtype=float)
    f, J = _model_and_jac(x, u)
    r = y - f
    cost = float(r @ r)
    lam = LAMBDA0
    streak = 0
    it = 0
    while it < max_iter:
        it += 1
        g = J.T @ r
        A = J.T @ J
        diag = np.diag(A).copy()
        diag[diag == 0] = 1.0
        try:
            step = np.linalg.solve(A + lam * np.diag(diag), g)
        except np.linalg.LinAlgError:
            lam *= LAMBDA_UP
            continue
        u_new = u + step
        if not _finite(u_new):
            lam *= LAMBDA_UP
            continue
        # wild trial steps may overflow; a non-finite cost is simply rejected
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            f_new, J_new = _model_and_jac(x, u_new)
            r_new = y - f_new
            cost_new = float(r_new @ r_new)
        if cost_new <= cost:
            rel = (cost - cost_new) / cost if cost > 0 else 0.0
            u, J, r = u_new, J_new, r_new
            cost = cost_new
            lam *= LAMBDA_DOWN
            gmax = float(np.max(np.abs(J.T @ r)))
            if rel < COST_RTOL or gmax < GRAD_TOL:
                streak += 1
                if streak >= 2:
                    return u, it, True
            else:
                streak = 0
        else:
            lam *= LAMBDA_UP
            if lam > 1e16:
                # no downhill step exists at working precision: u is a minimum
                # only if the gradient vanishes relative to the curvature scale
                scale = math.sqrt(float(np.max(diag)) * max(cost, 1e-300))
                gmax = float(np.max(np.abs(g)))
                return u, it, gmax <= 1e-6 * scale
    return u, it, False


def _covariance(x, peaks, baseline, rss, n_points):
    """Residual variance times (JᵀJ)⁻¹ in natural parameters."""
    with np.errstate(over="ignore", invalid="ignore"):
        J = model_jacobian(x, peaks, baseline)
        A = J.T @ J
    d = np.sqrt(np.diag(A))
    if np.any(d == 0) or not np.all(np.isfinite(A)):
        raise SingularFit("normal matrix has a zero column")
    As = A / np.outer(d, d)
    if np.linalg.cond(As) > COND_LIMIT:
        raise SingularFit("normal matrix is numerically singular at the solution")
    dof = max(n_points - A.shape[0], 1)
    cov = (rss / dof) * np.linalg.inv(As) / np.outer(d, d)
    return 0.5 * (cov + cov.T)


def _half_width_side(x, y, i, half, direction):
    j = i
    while 0 <= j + direction < x.size:
        nxt = j + direction
        if y[nxt] <= half:
            # linear interpolation of the crossing
            t = (y[j] - half) / (y[j] - y[nxt]) if y[j] != y[nxt] else 0.0
            return abs(x[j] + t * (x[nxt] - x[j]) - x[i]), True
        j = nxt
    return abs(x[j] - x[i]), False


def _single_guess(x, y, baseline):
    i = int(np.argmax(y))
    amp = float(y[i] - baseline)
    half = baseline + 0.5 * amp
    left, ok_l = _half_width_side(x, y, i, half, -1)
    right, ok_r = _half_width_side(x, y, i, half, +1)
    sides = [w for w, ok in ((left, ok_l), (right, ok_r)) if ok and w > 0]
    hw = min(sides) if sides else max(left, right)
    step = float(np.median(np.diff(x)))
    fwhm = float(max(2.0 * hw, 2.0 * step))
    return LorentzianParams(float(x[i]), fwhm, amp)


def initial_guess(s: Spectrum, n_peaks: int = 1):
    """Starting parameters for ``fit_peaks``; returns ``(peaks, baseline)``.

    The baseline is the 5th intensity percentile. The first line sits at
    the global maximum with its width from the nearer half-maximum crossing;
    a second line goes to the largest residual maximum at least one width
    away from the first.
    """
    if n_peaks not in (1, 2):
        raise ValueError("n_peaks must be 1 or 2")
    x, y = s.axis, s.intensity
    baseline = float(np.percentile(y, 5))
    mad = float(np.median(np.abs(y - np.median(y))))
    if float(np.max(y)) - baseline <= 3.0 * mad:
        raise NoPeak("no line stands out of the intensity scatter")
    first = _single_guess(x, y, baseline)
    if n_peaks == 1:
        return [first], baseline
    resid = y - lorentzian_eval(first, baseline, x)
    far = np.abs(x - first.center) >= first.fwhm
    if not np.any(far):
        far = x != first.center
    idx = np.flatnonzero(far)
    j = int(idx[np.argmax(resid[idx])])
    amp2 = float(resid[j])
    if amp2 <= 0:
        amp2 = 0.1 * first.amplitude
    second = LorentzianParams(float(x[j]), first.fwhm, amp2)
    return sorted([first, second], key=lambda p: p.center), baseline


def fit_peaks(s: Spectrum, n_peaks: int = 1, init=None) -> FitResult:
    """Least-squares fit of ``n_peaks`` Lorentzians on an eV-axis spectrum.

    ``init`` is an optional ``(peaks, baseline)`` pair; without it the
    starting point comes from :func:`initial_guess`. A fit that hits the
    iteration cap is still returned, with ``converged=False``.
    """
    if s.axis_unit != "electronvolt":
        raise ValueError("fit_peaks expects an eV axis; resample first")
    if init is None:
        peaks0, base0 = initial_guess(s, n_peaks)
    else:
        peaks0, base0 = init
        if len(peaks0) != n_peaks:
            raise ValueError("init does not match n_peaks")
    x, y = s.axis, s.intensity
    u, n_it, converged = levenberg_marquardt(x, y, _pack(peaks0, base0))
    peaks, baseline = _unpack(u)
    order = sorted(range(len(peaks)), key=lambda k: peaks[k].center)
    peaks = [peaks[k] for k in order]
    resid = y - model_eval(x, peaks, baseline)
    rss = float(resid @ resid)
    cov = _covariance(x, peaks, baseline, rss, x.size)
    if any(not (x[0] <= p.center <= x[-1]) for p in peaks):
        converged = False
    if not converged:
        log.warning("fit did not converge within %d iterations", n_it)
    return FitResult(
        peaks=tuple(peaks),
        baseline=baseline,
        covariance=cov,
        residual_rms=math.sqrt(rss / x.size),
        n_iterations=n_it,
        converged=converged,
        n_points=int(x.size),
    )


def bic(fit: FitResult) -> float:
    """``N ln(RSS/N) + k ln N``, with RSS floored at double precision noise."""
    n = fit.n_points
    scale = max(abs(fit.baseline), max(p.amplitude for p in fit.peaks))
    rss = max(fit.rss, n * (1e-13 * scale) ** 2)
    return n * math.log(rss / n) + fit.n_params * math.log(n)


def select_model(s: Spectrum) -> FitResult:
    """Fit one and two lines; keep two only if BIC drops by more than 10."""
    one = fit_peaks(s, 1)
    try:
        two = fit_peaks(s, 2)
    except (NoPeak, SingularFit, ValueError, FloatingPointError):
        return one
    if not two.converged:
        return one
    if not one.converged or bic(two) < bic(one) - BIC_MARGIN:
        return two
    return one


def center_sigma(f: FitResult) -> float:
    """One-sigma uncertainty of the line center (mean of centers for doublets)."""
    C = f.covariance
    if f.n_peaks == 1:
        return math.sqrt(max(C[0, 0], 0.0))
    var = 0.25 * (C[0, 0] + C[3, 3] + 2.0 * C[0, 3])
    return math.sqrt(max(var, 0.0))


def center_energy(f: FitResult) -> MeasurementStat:
    """Line center energy; a doublet reports the unweighted mean of its two centers."""
    if not f.converged:
        raise NotConverged("center_energy needs a converged fit")
    center = sum(p.center for p in f.peaks) / f.n_peaks
    n = max(f.n_points, 1)
    if n == 1:
        return MeasurementStat(center, 0.0, 1)
    dof = max(n - f.n_params, 1)
    t = float(stats.t.ppf(0.975, dof))
    return MeasurementStat(center, t * center_sigma(f), n)
