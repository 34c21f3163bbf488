"""Static renderings of the report tables.

Figures are drawn from the same rows that go into the CSV exports, so a
rendering never shows data that the table does not contain.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .eos import EXPERIMENT, EosParams, lattice_ratio_from_pressure, vinet_pressure  # noqa: E402

COLORS = {"SiV": "tab:blue", "GeV": "tab:red", "SnV": "tab:green"}

RC = {
    "font.size": 9,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.2,
    "legend.frameon": False,
    "svg.hashsalt": "dacspec",
    "svg.fonttype": "none",
}


def _column(header, rows, name):
    i = header.index(name)
    return np.array([np.nan if r[i] is None else float(r[i]) for r in rows])


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no timestamp in the output so repeated runs are byte-identical
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return path


def plot_fig3(header, rows, path, points=None, eos_params: EosParams = EXPERIMENT):
    """ZPL energy versus pressure with a lattice-ratio top axis.

    ``points`` optionally maps species to measured ``(P, E)`` arrays drawn
    as markers on top of the calibration curves.
    """
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.6))
        P = _column(header, rows, "P")
        for sp in ("SiV", "GeV"):
            name = f"E_{sp}"
            if name in header and np.any(np.isfinite(_column(header, rows, name))):
                ax.plot(P, _column(header, rows, name), color=COLORS[sp], lw=0.8, alpha=0.6)
            if points and sp in points:
                pp, ee = points[sp]
                ax.plot(pp, ee, "o", ms=3.5, color=COLORS[sp], label=f"{sp} measured")
        for sp in ("SiV", "GeV", "SnV"):
            name = f"E_theory_{sp}"
            if name in header:
                ax.plot(P, _column(header, rows, name), "-", color=COLORS[sp], label=f"{sp} computed")
        ax.set_xlabel("Pressure (GPa)")
        ax.set_ylabel("ZPL energy (eV)")
        ax.set_xlim(0, np.nanmax(P))

        def to_x(p):
            return np.array([lattice_ratio_from_pressure(min(max(v, 0.0), 600.0), eos_params) for v in np.atleast_1d(p)])

        def to_p(x):
            return vinet_pressure(np.clip(np.atleast_1d(x), 0.7, 1.05), eos_params)

        top = ax.secondary_xaxis("top", functions=(to_x, to_p))
        top.set_xlabel("x = a/a0")
        ax.legend(fontsize=7, loc="upper left")
        fig.tight_layout()
        return _save(fig, path)


def plot_fig4(header, rows, path):
    with plt.rc_context(RC):
        fig, (ax, inset) = plt.subplots(1, 2, figsize=(7.0, 3.0))
        P = _column(header, rows, "P")
        for name in header[1:]:
            kind, sp = name.rsplit("_", 1)
            y = _column(header, rows, name) * 1000.0
            ok = np.isfinite(y)
            color = COLORS.get(sp, "k")
            if kind == "dE_KS":
                ax.plot(P[ok], y[ok], color=color, label=sp)
            else:
                style = {"d_eg": "-", "d_eu": "--", "d_cbm": ":"}[kind]
                inset.plot(P[ok], y[ok], style, color="0.5" if kind == "d_cbm" else color, label=f"{kind[2:]} {sp}")
        ax.set_xlabel("Pressure (GPa)")
        ax.set_ylabel("Kohn-Sham ZPL shift (meV)")
        ax.legend(fontsize=7)
        inset.set_xlabel("Pressure (GPa)")
        inset.set_ylabel("level shift vs VBM (meV)")
        inset.legend(fontsize=6, ncol=2)
        fig.tight_layout()
        return _save(fig, path)


def plot_spectra(header, rows, path):
    """Waterfall of normalized traces lifted by their pressure."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.0, 5.5))
        ids = []
        for r in rows:
            if r[0] not in ids:
                ids.append(r[0])
        for sid in ids:
            sel = [r for r in rows if r[0] == sid]
            x = np.array([r[2] for r in sel])
            ax.plot(x, [r[4] for r in sel], color="tab:blue", lw=0.8)
            if sel[0][5] is not None:
                ax.plot(x, [r[5] for r in sel], color="k", lw=0.6, ls="--")
            ax.axhline(sel[0][1], color="0.6", lw=0.5, ls=":")
        ax.set_xlabel("Energy (eV)")
        ax.set_ylabel("Pressure (GPa)")
        fig.tight_layout()
        return _save(fig, path)
