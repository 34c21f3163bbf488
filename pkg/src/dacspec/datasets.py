"""Readers for the CSV tables this package consumes, and the bundled copies.

Every table is UTF-8 CSV with optional ``# key=value`` metadata lines before
a header row. The bundled ZPL tables are surrogate reconstructions that
match the reference shift rates and totals, not measured points.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .calib import CalibrationPoint, GaugeCalibration, LevelTrace, build_calibration, normalize_species
from .errors import ParseError

POINT_COLUMNS = ["P_gpa", "P_sigma", "E_ev", "E_sigma"]
LEVEL_COLUMNS = ["p_gpa", "eps_eu_ev", "eps_eg_ev", "eps_vbm_ev"]


def data_path(name: str) -> Path:
    return Path(str(resources.files("dacspec") / "data" / name))


def read_table(path) -> tuple[dict[str, str], list[str], list[list[float]]]:
    """Return ``(meta, header, rows)`` of a commented CSV file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    meta: dict[str, str] = {}
    header: list[str] | None = None
    rows: list[list[float]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        cells = [c.strip() for c in line.split(",")]
        if header is None:
            header = cells
            continue
        if len(cells) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} columns, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
    if header is None:
        raise ParseError(f"{path}: no header row")
    return meta, header, rows


def read_points(path) -> tuple[str | None, list[CalibrationPoint]]:
    meta, header, rows = read_table(path)
    if header != POINT_COLUMNS:
        raise ParseError(f"{path}: expected columns {','.join(POINT_COLUMNS)}")
    try:
        points = [CalibrationPoint(*row) for row in rows]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return meta.get("species"), points


def read_theory(path) -> tuple[str | None, list[tuple[float, float]]]:
    meta, header, rows = read_table(path)
    if len(header) != 2:
        raise ParseError(f"{path}: a theory table has two columns (p_gpa, e_ev)")
    return meta.get("species"), [(r[0], r[1]) for r in rows]


def read_level_trace(path, species: str | None = None) -> LevelTrace:
    meta, header, rows = read_table(path)
    if header[:4] != LEVEL_COLUMNS or len(header) not in (4, 5):
        raise ParseError(f"{path}: expected columns {', '.join(LEVEL_COLUMNS)}[, eps_cbm_ev]")
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    cbm = arr[:, 4] if len(header) == 5 else None
    species = species or meta.get("species")
    if species is None:
        raise ParseError(f"{path}: no species given (use a '# species=' line)")
    try:
        return LevelTrace(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], cbm, species)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def load_points(species: str) -> list[CalibrationPoint]:
    sp = normalize_species(species)
    return read_points(data_path(f"{sp.lower()}_zpl.csv"))[1]


def load_calibration(species: str, mask_below: float | None = None) -> GaugeCalibration:
    return build_calibration(species, load_points(species), mask_below=mask_below)


def load_theory(species: str) -> list[tuple[float, float]]:
    sp = normalize_species(species)
    return read_theory(data_path(f"theory_{sp.lower()}.csv"))[1]


def load_clusters() -> list[float]:
    """SiV center energies (eV) of the seven clusters at 40 GPa."""
    _, _, rows = read_table(data_path("siv_clusters_40gpa.csv"))
    return [r[1] for r in rows]


def load_crossover() -> list[tuple[float, float, float]]:
    """(nominal GPa, ruby nm, Raman edge cm⁻¹) readings near the gauge switch-over."""
    _, _, rows = read_table(data_path("crossover.csv"))
    return [tuple(r) for r in rows]
