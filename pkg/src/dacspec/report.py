"""Plot-ready tables for the pressure-dependence figures.

Each builder returns ``(header, rows)`` with ``None`` marking cells where a
series is undefined; :func:`write_csv` renders blanks for them.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .calib import GaugeCalibration, LevelTrace, align_theory, eval_calibration, ks_zpl_shift, vbm_referenced_shift, ZPL0_MEASURED
from .eos import EXPERIMENT, EosParams, lattice_ratio_from_pressure
from .peakfit import FitResult, model_eval
from .spectra import Spectrum

FIG3_SPECIES = ("SiV", "GeV")
THEORY_SPECIES = ("SiV", "GeV", "SnV")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_csv(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def fig3_table(
    calibrations: Mapping[str, GaugeCalibration],
    theory: Mapping[str, Sequence[tuple[float, float]]],
    eos_params: EosParams = EXPERIMENT,
    step: float = 1.0,
):
    """ZPL energy against pressure with the lattice-ratio axis.

    Theory curves are shifted onto the measured zero-pressure ZPLs
    (1.68, 2.06 and 2.00 eV) and linearly interpolated between their
    tabulated pressures.
    """
    p_max = max(
        [cal.range[1] for cal in calibrations.values()] + [max(p for p, _ in t) for t in theory.values()]
    )
    grid = set(np.round(np.arange(0.0, p_max + 0.5 * step, step), 9).tolist())
    for cal in calibrations.values():
        grid.update(p.pressure for p in cal.points)
    grid = sorted(g for g in grid if g <= p_max)

    aligned = {}
    for sp, table in theory.items():
        zpl0 = ZPL0_MEASURED[sp]
        aligned[sp] = np.array(sorted(align_theory(table, zpl0)))

    header = ["P", "x"] + [f"E_{sp}" for sp in FIG3_SPECIES] + [f"E_theory_{sp}" for sp in THEORY_SPECIES]
    rows = []
    for p in grid:
        row = [p, lattice_ratio_from_pressure(p, eos_params)]
        for sp in FIG3_SPECIES:
            cal = calibrations.get(sp)
            inside = cal is not None and cal.range[0] <= p <= cal.range[1]
            row.append(float(eval_calibration(cal, p)) if inside else None)
        for sp in THEORY_SPECIES:
            t = aligned.get(sp)
            inside = t is not None and t[0, 0] <= p <= t[-1, 0]
            row.append(float(np.interp(p, t[:, 0], t[:, 1])) if inside else None)
        rows.append(row)
    return header, rows


def fig4_table(traces: Sequence[LevelTrace]):
    """Kohn-Sham ZPL shift and VBM-referenced level shifts per species."""
    grid = sorted({float(p) for t in traces for p in t.pressure_grid})
    header = ["P"]
    series = []
    for t in traces:
        sp = t.species
        cols = {f"dE_KS_{sp}": ks_zpl_shift(t)}
        cols[f"d_eu_{sp}"] = vbm_referenced_shift(t, "eu")
        cols[f"d_eg_{sp}"] = vbm_referenced_shift(t, "eg")
        if t.eps_cbm is not None:
            cols[f"d_cbm_{sp}"] = vbm_referenced_shift(t, "cbm")
        for name, pairs in cols.items():
            header.append(name)
            series.append(dict(pairs))
    rows = [[p] + [s.get(p) for s in series] for p in grid]
    return header, rows


def spectra_table(stack: Sequence[tuple[str, float, Spectrum, FitResult | None]]):
    """Long-format waterfall: each trace normalized and lifted by its pressure.

    ``stack`` items are ``(spectrum_id, pressure_gpa, spectrum, fit)``; the
    normalized height of every trace is the smallest pressure gap so that
    neighbouring traces do not overlap.
    """
    pressures = sorted(p for _, p, _, _ in stack)
    gaps = [b - a for a, b in zip(pressures, pressures[1:]) if b > a]
    height = min(gaps) if gaps else 10.0
    header = ["spectrum_id", "pressure_gpa", "energy_ev", "intensity", "offset_intensity", "fit_offset_intensity"]
    rows = []
    for sid, p, s, fit in sorted(stack, key=lambda item: item[1]):
        lo, hi = float(np.min(s.intensity)), float(np.max(s.intensity))
        scale = height / (hi - lo) if hi > lo else 0.0
        model = model_eval(s.axis, fit.peaks, fit.baseline) if fit is not None else None
        for i, (x, y) in enumerate(zip(s.axis, s.intensity)):
            fitted = None if model is None else p + (model[i] - lo) * scale
            rows.append([sid, p, x, y, p + (y - lo) * scale, fitted])
    return header, rows
