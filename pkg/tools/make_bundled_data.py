"""Regenerate the derived bundled data files in src/dacspec/data.

The ZPL tables (siv_zpl.csv, gev_zpl.csv) are hand-entered surrogates; this
script builds everything that is derived from them or synthesized:
theory curves, the seven-cluster SiV sample, the ruby/Raman crossover
readings and the example GeV doublet spectrum at 140 GPa.
"""

from pathlib import Path

import numpy as np

from dacspec import datasets
from dacspec.calib import MonotoneCubic
from dacspec.peakfit import LorentzianParams
from dacspec.spectra import HC_EV_NM, Spectrum, synth_spectrum, write_spectrum

DATA = Path(__file__).resolve().parents[1] / "src" / "dacspec" / "data"
GRID = np.arange(0.0, 181.0, 5.0)


def theory_shape(points, low_slope, p_join):
    """Measured-curve shape above ``p_join``, linear with ``low_slope`` (meV/GPa) below."""
    P = np.array([p.pressure for p in points if p.pressure >= p_join])
    E = np.array([p.energy for p in points if p.pressure >= p_join])
    e_join = E[0]
    P = np.concatenate([[0.0], P])
    E = np.concatenate([[e_join - low_slope * 1e-3 * p_join], E])
    f = MonotoneCubic(P, E)
    g = np.clip(GRID, 0, P[-1])
    shift = f(g) - E[0]
    # beyond the last node continue with the final secant
    tail = GRID > P[-1]
    shift[tail] = f(P[-1]) - E[0] + (GRID[tail] - P[-1]) * (E[-1] - E[-2]) / (P[-1] - P[-2])
    return shift


def write_theory(name, species, e0, shift):
    lines = [
        f"# species={species}",
        "# source=surrogate computed-ZPL curve; shape is illustrative, only the 0 GPa value is a reference constant",
        "p_gpa,e_ev",
    ]
    lines += [f"{p:g},{e0 + s:.6f}" for p, s in zip(GRID, shift)]
    (DATA / name).write_text("\n".join(lines) + "\n")


def main():
    siv = datasets.load_points("siv")
    gev = datasets.load_points("gev")
    siv_shift = theory_shape(siv, 1.00, 9.0)
    gev_shift = theory_shape(gev, 2.90, 20.0)
    write_theory("theory_siv.csv", "SiV", 1.57, siv_shift)
    write_theory("theory_gev.csv", "GeV", 2.00, gev_shift)
    write_theory("theory_snv.csv", "SnV", 1.98, gev_shift * 3.85 / 2.90)

    dev_mev = [-3.1, 2.4, -0.8, 3.5, -2.2, 1.0, -0.8]
    e40 = [p.energy for p in siv if p.pressure == 40][0]
    lines = ["# species=SiV", "# pressure_gpa=40", "# source=surrogate per-cluster scatter", "cluster,E_ev"]
    lines += [f"{k + 1},{e40 + d * 1e-3:.5f}" for k, d in enumerate(dev_mev)]
    (DATA / "siv_clusters_40gpa.csv").write_text("\n".join(lines) + "\n")

    # ruby and Raman-edge readings close to the gauge switch-over pressure
    rows = [(70, 716.35, 1489.1), (79, 718.72, 1500.9), (89, 721.55, 1511.6)]
    lines = ["# source=surrogate readings near the ruby/Raman switch-over", "nominal_gpa,ruby_nm,raman_cm1"]
    lines += [f"{p},{r},{n}" for p, r, n in rows]
    (DATA / "crossover.csv").write_text("\n".join(lines) + "\n")

    doublet = [LorentzianParams(2.335, 0.020, 800.0), LorentzianParams(2.365, 0.020, 650.0)]
    s = synth_spectrum(doublet, baseline=40.0, noise_sigma=8.0, seed=140, grid=(2.25, 2.45, 400))
    nm = Spectrum(
        HC_EV_NM / s.axis[::-1],
        s.intensity[::-1],
        "nanometer",
        {"species": "GeV", "pressure_gpa": "140", "excitation_nm": "488", "source": "synthetic doublet"},
    )
    write_spectrum(nm, DATA / "gev_140gpa.csv")


if __name__ == "__main__":
    main()
