"""``dacspec`` command line.

Exit codes: 0 success, 2 input/parse error, 3 fit failure, 4 range or
extrapolation refusal, 5 calibration construction failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, datasets, documents, report
from .calib import build_calibration, linear_slope, normalize_species
from .eos import PRESETS, EosParams, state_from_pressure, state_from_ratio
from .errors import DacspecError, NoPeak, OutOfRange, ParseError
from .gauges import DEFAULT_SCALES, raman_edge_pressure, ruby_pressure, zpl_pressure
from .peakfit import LorentzianParams, center_energy, center_sigma, fit_peaks, select_model
from .spectra import HC_EV_NM, Spectrum, read_spectrum, resample_to_energy, synth_spectrum, write_spectrum

log = logging.getLogger("dacspec")

EXIT_OK, EXIT_INPUT, EXIT_FIT, EXIT_RANGE, EXIT_CALIB = 0, 2, 3, 4, 5

SLOPE_WINDOWS = {"SiV": [(0.0, 20.0), (20.0, 40.0)], "GeV": [(20.0, 40.0), (0.0, 20.0)], "SnV": [(0.0, 20.0)]}

RECORD_FIELDS = [
    "spectrum_id", "n_peaks", "center_ev", "center_hw95_ev", "converged",
    "pressure_gpa", "pressure_sigma_gpa", "gauge_id", "timestamp", "tool_version",
]


# --- configuration helpers ----------------------------------------------------

def _config(args) -> documents.RunConfig:
    if getattr(args, "config", None):
        return documents.read_run_config(args.config)
    return documents.default_run_config()


def _output_dir(args, cfg) -> Path:
    out = Path(args.output_dir) if getattr(args, "output_dir", None) else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scales(cfg):
    if cfg.scale_coefficients_path is not None:
        return documents.read_scales(cfg.scale_coefficients_path)
    return DEFAULT_SCALES


def _eos_params(spec: str | None, cfg=None) -> EosParams:
    if spec is None:
        if cfg is not None and cfg.eos_params_path is not None:
            return documents.read_eos(cfg.eos_params_path)
        return PRESETS["experiment"]
    if spec in PRESETS:
        return PRESETS[spec]
    return documents.read_eos(spec)


def _calibration(species: str, path: str | None, cfg):
    species = normalize_species(species)
    if path:
        return documents.read_calibration(path)
    for p in cfg.calibration_paths:
        cal = documents.read_calibration(p)
        if cal.species == species:
            return cal
    return datasets.load_calibration(species)


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return now.isoformat(timespec="seconds")


# --- fit ----------------------------------------------------------------------

def _fit_one(job):
    """Worker: returns (path, status, payload). Runs in a child process."""
    path, peaks = job
    try:
        s = resample_to_energy(read_spectrum(path))
    except (ParseError, OutOfRange) as exc:
        return path, "parse", str(exc)
    try:
        fit = select_model(s) if peaks == "auto" else fit_peaks(s, int(peaks))
    except NoPeak as exc:
        return path, "nopeak", str(exc)
    except DacspecError as exc:
        return path, "fit", str(exc)
    return path, "ok", documents.fit_to_text(fit, Path(path).stem)


def cmd_fit(args) -> int:
    cfg = _config(args)
    out = _output_dir(args, cfg)
    jobs = [(str(p), args.peaks) for p in args.files]
    workers = args.parallelism or cfg.parallelism
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fit_one, jobs))
    else:
        results = [_fit_one(j) for j in jobs]

    cal = _calibration(args.species, args.calibration, cfg) if args.species else None
    parse_failed = fit_failed = False
    records = []
    for path, kind, payload in results:
        if kind == "parse":
            print(f"{path}: parse error: {payload}", file=sys.stderr)
            parse_failed = True
            continue
        if kind != "ok":
            print(f"{path}: fit failed: {payload}", file=sys.stderr)
            fit_failed = True
            continue
        fit = documents.fit_from_text(payload)
        stem = Path(path).stem
        (out / f"{stem}.fit.txt").write_text(payload, encoding="utf-8")
        line = f"{path}: {fit.n_peaks} peak(s)"
        rec = {"spectrum_id": stem, "n_peaks": fit.n_peaks, "converged": fit.converged}
        if fit.converged:
            stat = center_energy(fit)
            line += f", center {stat.mean:.6f} eV ± {stat.half_width_95:.2g} (95%)"
            rec.update(center_ev=documents.fmt(stat.mean), center_hw95_ev=documents.fmt(stat.half_width_95))
            if cal is not None:
                try:
                    est = zpl_pressure(stat.mean, cal, center_sigma(fit))
                    line += f", P = {est.value:.2f} ± {est.sigma:.2f} GPa"
                    rec.update(pressure_gpa=documents.fmt(est.value), pressure_sigma_gpa=documents.fmt(est.sigma), gauge_id=est.gauge_id)
                except OutOfRange as exc:
                    line += f", no pressure ({exc})"
        else:
            line += ", NOT converged"
            fit_failed = True
        print(line)
        rec.update(timestamp=_timestamp(), tool_version=__version__)
        records.append(rec)

    if records:
        rec_path = out / "records.csv"
        new = not rec_path.exists()
        with rec_path.open("a", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=RECORD_FIELDS, lineterminator="\n")
            if new:
                w.writeheader()
            w.writerows(records)
    if parse_failed:
        return EXIT_INPUT
    return EXIT_FIT if fit_failed else EXIT_OK


# --- pressure -----------------------------------------------------------------

def cmd_pressure(args) -> int:
    cfg = _config(args)
    if args.gauge == "ruby":
        est = ruby_pressure(args.value, _scales(cfg))
    elif args.gauge == "raman":
        est = raman_edge_pressure(args.value, _scales(cfg))
    else:
        if not args.species:
            print("pressure zpl needs --species", file=sys.stderr)
            return EXIT_INPUT
        cal = _calibration(args.species, args.calibration, cfg)
        est = zpl_pressure(args.value, cal, args.sigma)
    print(f"{est.value:.4f} ± {est.sigma:.4f} GPa ({est.gauge_id})")
    out = _output_dir(args, cfg)
    (out / f"pressure_{est.gauge_id}.txt").write_text(documents.pressure_to_text(est), encoding="utf-8")
    return EXIT_OK


# --- calibrate ----------------------------------------------------------------

def cmd_calibrate(args) -> int:
    if args.bundled:
        species = normalize_species(args.bundled)
        points = datasets.load_points(species)
    elif args.dataset:
        species, points = datasets.read_points(args.dataset)
        species = args.species or species
        if species is None:
            print("no species in dataset; pass --species", file=sys.stderr)
            return EXIT_INPUT
        species = normalize_species(species)
    else:
        print("calibrate needs a dataset file or --bundled", file=sys.stderr)
        return EXIT_INPUT
    cal = build_calibration(species, points, mask_below=args.mask_below)
    lo, hi = cal.range
    flag = " (lowest node, not extrapolated to 0 GPa)" if cal.zpl0_extrapolated else ""
    print(f"species {cal.species}: range {lo:g}-{hi:g} GPa, zpl0 {cal.zpl0:.4f} eV{flag}")
    for window in SLOPE_WINDOWS.get(cal.species, []):
        try:
            slope, err = linear_slope(cal.points, window)
        except DacspecError:
            continue
        print(f"  slope {window[0]:g}-{window[1]:g} GPa: {slope:.2f} ± {err:.2f} meV/GPa")
    text = documents.calibration_to_text(cal)
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --- eos ----------------------------------------------------------------------

def cmd_eos(args) -> int:
    cfg = _config(args) if args.params is None else None
    params = _eos_params(args.params, cfg)
    if args.pressure is not None:
        st = state_from_pressure(args.pressure, params)
    else:
        st = state_from_ratio(args.ratio, params)
    print(f"P = {st.pressure:.4f} GPa, x = a/a0 = {st.x:.6f}, a = {st.x * params.a0:.4f} Å "
          f"(a0 = {params.a0} Å, B0 = {params.b0} GPa, B0' = {params.b0_prime})")
    return EXIT_OK


# --- synth --------------------------------------------------------------------

def _grid(text: str):
    try:
        lo, hi, n = text.split(",")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError("grid must be LO,HI,N") from None


def cmd_synth(args) -> int:
    n = len(args.center)
    fwhm = args.fwhm or [0.02]
    amp = args.amplitude or [1000.0]
    fwhm = fwhm * n if len(fwhm) == 1 else fwhm
    amp = amp * n if len(amp) == 1 else amp
    if len(fwhm) != n or len(amp) != n:
        print("--fwhm/--amplitude must be given once or once per --center", file=sys.stderr)
        return EXIT_INPUT
    peaks = [LorentzianParams(c, w, a) for c, w, a in zip(args.center, fwhm, amp)]
    meta = {"pressure_gpa": str(args.pressure)} if args.pressure is not None else {}
    s = synth_spectrum(peaks, args.baseline, args.noise, args.seed, args.grid, meta)
    if args.axis == "nm":
        s = Spectrum(HC_EV_NM / s.axis[::-1], s.intensity[::-1], "nanometer", s.meta)
    write_spectrum(s, args.output)
    print(f"wrote {args.output} ({len(s)} points)")
    return EXIT_OK


# --- export-plot --------------------------------------------------------------

def cmd_export_plot(args) -> int:
    from . import plotting

    cfg = _config(args)
    out = _output_dir(args, cfg)
    if args.what == "fig3":
        cals = {}
        for p in args.calibration or []:
            cal = documents.read_calibration(p)
            cals[cal.species] = cal
        if not args.calibration:
            cals = {sp: datasets.load_calibration(sp) for sp in ("SiV", "GeV")}
        theory = {}
        for p in args.theory or []:
            sp, table = datasets.read_theory(p)
            if sp is None:
                raise ParseError(f"{p}: theory table needs a '# species=' line")
            theory[normalize_species(sp)] = table
        if not args.theory:
            theory = {sp: datasets.load_theory(sp) for sp in ("SiV", "GeV", "SnV")}
        params = _eos_params(args.eos, cfg)
        header, rows = report.fig3_table(cals, theory, params)
        csv_path = report.write_csv(out / "fig3.csv", header, rows)
        if not args.no_svg:
            pts = {sp: ([p.pressure for p in c.points], [p.energy for p in c.points]) for sp, c in cals.items()}
            plotting.plot_fig3(header, rows, out / "fig3.svg", pts, params)
    elif args.what == "fig4":
        if not args.trace:
            print("fig4 export needs at least one --trace file", file=sys.stderr)
            return EXIT_INPUT
        traces = [datasets.read_level_trace(p) for p in args.trace]
        header, rows = report.fig4_table(traces)
        csv_path = report.write_csv(out / "fig4.csv", header, rows)
        if not args.no_svg:
            plotting.plot_fig4(header, rows, out / "fig4.svg")
    else:
        if not args.files:
            print("spectra export needs spectrum files", file=sys.stderr)
            return EXIT_INPUT
        stack = []
        for p in args.files:
            s = resample_to_energy(read_spectrum(p))
            if "pressure_gpa" not in s.meta:
                raise ParseError(f"{p}: needs a '# pressure_gpa=' header for the waterfall")
            fit = None if args.peaks == "none" else (select_model(s) if args.peaks == "auto" else fit_peaks(s, int(args.peaks)))
            stack.append((Path(p).stem, float(s.meta["pressure_gpa"]), s, fit))
        header, rows = report.spectra_table(stack)
        csv_path = report.write_csv(out / "spectra.csv", header, rows)
        if not args.no_svg:
            plotting.plot_spectra(header, rows, out / "spectra.svg")
    print(f"wrote {csv_path}")
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dacspec", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"dacspec {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, output=True):
        p.add_argument("--config", help="run configuration document (default: $DACSPEC_CONFIG)")
        if output:
            p.add_argument("--output-dir", help="directory for result documents")

    p = sub.add_parser("fit", help="fit Lorentzian lines to spectrum files")
    p.add_argument("files", nargs="+")
    p.add_argument("--peaks", choices=["auto", "1", "2"], default="auto")
    p.add_argument("--species", help="convert centers to pressure with this species' calibration")
    p.add_argument("--calibration", help="calibration document (default: config or bundled)")
    p.add_argument("--parallelism", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("pressure", help="pressure from a ruby, Raman-edge or ZPL reading")
    p.add_argument("gauge", choices=["ruby", "raman", "zpl"])
    p.add_argument("value", type=float, help="nm (ruby), cm-1 (raman) or eV (zpl)")
    p.add_argument("--species")
    p.add_argument("--calibration")
    p.add_argument("--sigma", type=float, default=0.0, help="1-sigma uncertainty of a ZPL reading in eV")
    common(p)
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("calibrate", help="build a ZPL calibration from (P, E) points")
    p.add_argument("dataset", nargs="?")
    p.add_argument("--bundled", choices=["siv", "gev"])
    p.add_argument("--species")
    p.add_argument("--mask-below", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("eos", help="diamond lattice ratio <-> pressure")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--pressure", type=float)
    g.add_argument("--ratio", type=float)
    p.add_argument("--params", help="'experiment', 'theory' or an EOS parameter file")
    common(p, output=False)
    p.set_defaults(func=cmd_eos)

    p = sub.add_parser("synth", help="write a synthetic Lorentzian spectrum")
    p.add_argument("--center", type=float, action="append", required=True)
    p.add_argument("--fwhm", type=float, action="append")
    p.add_argument("--amplitude", type=float, action="append")
    p.add_argument("--baseline", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=_grid, default=(1.5, 1.9, 401), help="LO,HI,N in eV")
    p.add_argument("--axis", choices=["ev", "nm"], default="ev")
    p.add_argument("--pressure", type=float, help="pressure_gpa metadata")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("export-plot", help="plot-ready CSV and SVG for the pressure figures")
    p.add_argument("what", choices=["fig3", "fig4", "spectra"])
    p.add_argument("files", nargs="*", help="spectrum files (spectra export)")
    p.add_argument("--calibration", action="append", help="calibration documents (fig3)")
    p.add_argument("--theory", action="append", help="theory tables (fig3)")
    p.add_argument("--eos", help="'experiment', 'theory' or an EOS parameter file")
    p.add_argument("--trace", action="append", help="Kohn-Sham level-trace CSV (fig4)")
    p.add_argument("--peaks", choices=["auto", "1", "2", "none"], default="auto")
    p.add_argument("--no-svg", action="store_true")
    common(p)
    p.set_defaults(func=cmd_export_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except DacspecError as exc:
        print(f"dacspec {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"dacspec {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
