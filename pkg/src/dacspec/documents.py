"""Key-value documents for parameters and results.

One format serves every document type::

    # comment
    key = value
    key = 1.5, 2.5
    [points]
    P_gpa, P_sigma, E_ev, E_sigma
    1, 1, 1.681, 0.0013

Floats are written with 17 significant digits so values re-parse bit-exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calib import CalibrationPoint, GaugeCalibration, build_calibration
from .eos import EosParams
from .errors import ParseError
from .gauges import PressureEstimate, ScaleCoefficients
from .peakfit import FitResult, LorentzianParams


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def dumps(pairs: dict[str, object], title: str = "", table: tuple[str, list[str], list[list[float]]] | None = None) -> str:
    lines = [f"# {title}"] if title else []
    for key, value in pairs.items():
        if value is None:
            continue
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = fmt(value)
        elif isinstance(value, (list, tuple, np.ndarray)):
            text = ", ".join(fmt(v) for v in value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    if table is not None:
        name, header, rows = table
        lines.append(f"[{name}]")
        lines.append(", ".join(header))
        lines.extend(", ".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def loads(text: str, source: str = "<document>"):
    """Parse a document into ``(pairs, tables)``; tables map name -> (header, rows)."""
    pairs: dict[str, str] = {}
    tables: dict[str, tuple[list[str], list[list[float]]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            tables[current] = ([], [])
            continue
        if current is not None:
            header, rows = tables[current]
            cells = [c.strip() for c in line.split(",")]
            if not header:
                header.extend(cells)
                continue
            if len(cells) != len(header):
                raise ParseError(f"{source}:{lineno}: expected {len(header)} cells")
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise ParseError(f"{source}:{lineno}: {exc}") from None
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"{source}:{lineno}: expected 'key = value'")
        pairs[key.strip()] = value.strip()
    return pairs, tables


def _read(path) -> tuple[dict[str, str], dict]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    return loads(text, str(path))


def _float(pairs, key, source):
    if key not in pairs:
        raise ParseError(f"{source}: missing mandatory key {key!r}")
    try:
        return float(pairs[key])
    except ValueError:
        raise ParseError(f"{source}: {key} is not a number: {pairs[key]!r}") from None


def _floats(pairs, key, source):
    try:
        return [float(v) for v in pairs[key].split(",")]
    except (KeyError, ValueError):
        raise ParseError(f"{source}: bad or missing list {key!r}") from None


def _bool(text: str) -> bool:
    return text.strip().lower() in ("true", "1", "yes")


# --- FitResult ----------------------------------------------------------------

def fit_to_text(fit: FitResult, spectrum_id: str = "") -> str:
    pairs: dict[str, object] = {}
    if spectrum_id:
        pairs["spectrum_id"] = spectrum_id
    pairs["n_peaks"] = fit.n_peaks
    for k, p in enumerate(fit.peaks, 1):
        pairs[f"center_{k}"] = p.center
        pairs[f"fwhm_{k}"] = p.fwhm
        pairs[f"amplitude_{k}"] = p.amplitude
    pairs["baseline"] = fit.baseline
    pairs["residual_rms"] = fit.residual_rms
    pairs["n_iterations"] = fit.n_iterations
    pairs["n_points"] = fit.n_points
    pairs["converged"] = fit.converged
    pairs["covariance_order"] = " ".join(fit.param_names)
    pairs["covariance"] = fit.covariance.ravel()
    return dumps(pairs, "dacspec fit result")


def fit_from_text(text: str, source: str = "<fit>") -> FitResult:
    pairs, _ = loads(text, source)
    n = int(_float(pairs, "n_peaks", source))
    peaks = [
        LorentzianParams(
            _float(pairs, f"center_{k}", source),
            _float(pairs, f"fwhm_{k}", source),
            _float(pairs, f"amplitude_{k}", source),
        )
        for k in range(1, n + 1)
    ]
    m = 3 * n + 1
    cov = np.array(_floats(pairs, "covariance", source))
    if cov.size != m * m:
        raise ParseError(f"{source}: covariance needs {m * m} entries")
    return FitResult(
        peaks=tuple(peaks),
        baseline=_float(pairs, "baseline", source),
        covariance=cov.reshape(m, m),
        residual_rms=_float(pairs, "residual_rms", source),
        n_iterations=int(_float(pairs, "n_iterations", source)),
        converged=_bool(pairs.get("converged", "false")),
        n_points=int(_float(pairs, "n_points", source)),
    )


# --- EOS and scale parameters -------------------------------------------------

def eos_to_text(params: EosParams) -> str:
    return dumps(
        {
            "label": params.label or "custom",
            "a0_angstrom": params.a0,
            "b0_gpa": params.b0,
            "b0_prime": params.b0_prime,
        },
        "dacspec equation-of-state parameters",
    )


def read_eos(path) -> EosParams:
    pairs, _ = _read(path)
    src = str(path)
    try:
        return EosParams(
            a0=_float(pairs, "a0_angstrom", src),
            b0=_float(pairs, "b0_gpa", src),
            b0_prime=_float(pairs, "b0_prime", src),
            label=pairs.get("label", ""),
        )
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{src}: {exc}") from None


_SCALE_KEYS = {
    "ruby.lambda0_nm": "ruby_lambda0",
    "ruby.A_gpa": "ruby_A",
    "ruby.B": "ruby_B",
    "raman.nu0_cm1": "raman_nu0",
    "raman.K0_gpa": "raman_K0",
    "raman.K0_prime": "raman_K0_prime",
}


def scales_to_text(coeffs: ScaleCoefficients) -> str:
    return dumps({k: float(getattr(coeffs, attr)) for k, attr in _SCALE_KEYS.items()}, "dacspec pressure-scale coefficients")


def read_scales(path) -> ScaleCoefficients:
    pairs, _ = _read(path)
    src = str(path)
    kwargs = {attr: _float(pairs, key, src) for key, attr in _SCALE_KEYS.items()}
    try:
        return ScaleCoefficients(**kwargs)
    except ValueError as exc:
        raise ParseError(f"{src}: {exc}") from None


# --- calibrations -------------------------------------------------------------

def calibration_to_text(cal: GaugeCalibration) -> str:
    rows = [[p.pressure, p.pressure_sigma, p.energy, p.energy_sigma] for p in cal.all_points]
    return dumps(
        {
            "species": cal.species,
            "zpl0_ev": cal.zpl0,
            "zpl0_extrapolated": cal.zpl0_extrapolated,
            "range_gpa": list(cal.range),
            "mask_below_gpa": cal.mask_below,
        },
        "dacspec ZPL calibration",
        table=("points", ["P_gpa", "P_sigma", "E_ev", "E_sigma"], rows),
    )


def calibration_from_text(text: str, source: str = "<calibration>") -> GaugeCalibration:
    pairs, tables = loads(text, source)
    if "species" not in pairs or "points" not in tables:
        raise ParseError(f"{source}: a calibration needs 'species' and a [points] table")
    header, rows = tables["points"]
    if [h.strip() for h in header] != ["P_gpa", "P_sigma", "E_ev", "E_sigma"]:
        raise ParseError(f"{source}: unexpected point columns {header}")
    mask = float(pairs["mask_below_gpa"]) if "mask_below_gpa" in pairs else None
    points = [CalibrationPoint(*row) for row in rows]
    cal = build_calibration(pairs["species"], points, mask_below=mask)
    if "zpl0_ev" in pairs and float(pairs["zpl0_ev"]) != cal.zpl0:
        raise ParseError(f"{source}: zpl0_ev does not match the points")
    return cal


def read_calibration(path) -> GaugeCalibration:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    return calibration_from_text(text, str(path))


def pressure_to_text(est: PressureEstimate) -> str:
    return dumps(
        {
            "gauge_id": est.gauge_id,
            "pressure_gpa": est.value,
            "sigma_gpa": est.sigma,
            "source_feature": est.source_feature,
            "feature_unit": est.feature_unit or None,
            "sources": " ".join(est.sources) or None,
        },
        "dacspec pressure estimate",
    )


# --- run configuration --------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Paths and settings of a batch run; missing entries fall back to bundled defaults."""

    scale_coefficients_path: Path | None = None
    eos_params_path: Path | None = None
    calibration_paths: tuple[Path, ...] = field(default=())
    output_dir: Path = Path("dacspec-out")
    parallelism: int = 1

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


def read_run_config(path) -> RunConfig:
    path = Path(path)
    pairs, _ = _read(path)
    base = path.parent

    def resolve(p):
        p = Path(p.strip())
        return p if p.is_absolute() else base / p

    cfg = RunConfig(
        scale_coefficients_path=resolve(pairs["scale_coefficients"]) if "scale_coefficients" in pairs else None,
        eos_params_path=resolve(pairs["eos_params"]) if "eos_params" in pairs else None,
        calibration_paths=tuple(resolve(p) for p in pairs.get("calibrations", "").split(",") if p.strip()),
        output_dir=resolve(pairs.get("output_dir", "dacspec-out")),
        parallelism=int(pairs.get("parallelism", "1")),
    )
    for p in [cfg.scale_coefficients_path, cfg.eos_params_path, *cfg.calibration_paths]:
        if p is not None and not p.is_file():
            raise ParseError(f"{path}: referenced file {p} does not exist")
    return cfg


def default_run_config() -> RunConfig:
    env = os.environ.get("DACSPEC_CONFIG")
    return read_run_config(env) if env else RunConfig()
