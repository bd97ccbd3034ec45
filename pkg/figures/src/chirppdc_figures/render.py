"""Render static figures from chirppdc CSV artifacts.

Usage: chirppdc-render <figure_id> --in data.csv [--in more.csv] --out fig.png

Figure ids and their inputs:
    grating     design.csv                      poling profile + phase
    spectrum    spectrum.csv                    signal-side theory spectrum
    covariance  covariance.csv                  signal/idler covariance map
    gain        gain_curve.csv gain_fits.csv    flux vs power + both fits
    sfg         sfg_coarse.csv sfg_fine.csv     delay scan, ps + fs panels

Pure functions of the input files; exits nonzero naming any missing
column.
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


class SchemaError(ValueError):
    """Input CSV lacks an expected column."""


def load_table(path, required):
    table = np.genfromtxt(path, delimiter=",", names=True)
    names = table.dtype.names or ()
    for column in required:
        if column not in names:
            raise SchemaError(f"{path}: missing column {column!r} "
                              f"(found {list(names)})")
    return table


def render_grating(inputs, output):
    table = load_table(inputs[0], ["z_mm", "K_rad_per_mm", "phi_rad"])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(table["z_mm"], table["K_rad_per_mm"], color="tab:blue")
    ax.set_xlabel("z (mm)")
    ax.set_ylabel("grating vector K (rad/mm)", color="tab:blue")
    ax.tick_params(axis="y", labelcolor="tab:blue")
    twin = ax.twinx()
    twin.plot(table["z_mm"], table["phi_rad"], color="tab:orange", ls="--")
    twin.set_ylabel("accumulated phase (rad)", color="tab:orange")
    twin.tick_params(axis="y", labelcolor="tab:orange")
    ax.set_title("Aperiodic poling profile")
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


def render_spectrum(inputs, output):
    table = load_table(inputs[0], ["detuning_THz", "wavelength_nm",
                                   "photons_per_mode"])
    signal = table[table["detuning_THz"] > 0]
    if signal.size == 0:
        signal = table
    order = np.argsort(signal["wavelength_nm"])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(signal["wavelength_nm"][order],
            signal["photons_per_mode"][order], color="tab:red")
    ax.set_xlabel("signal wavelength (nm)")
    ax.set_ylabel("photons per mode")
    ax.set_title("Theory spectrum of the signal beam")
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


def render_covariance(inputs, output):
    table = load_table(inputs[0], ["signal_THz", "idler_THz", "cov",
                                   "mean_s", "mean_i"])
    sig = np.unique(table["signal_THz"])
    idl = np.unique(table["idler_THz"])
    grid = np.full((idl.size, sig.size), np.nan)
    si = np.searchsorted(sig, table["signal_THz"])
    ii = np.searchsorted(idl, table["idler_THz"])
    grid[ii, si] = table["cov"]
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    mesh = ax.pcolormesh(sig, idl, grid, shading="nearest", cmap="inferno")
    fig.colorbar(mesh, ax=ax, label="covariance (photons$^2$)")
    ax.set_xlabel("signal frequency (THz)")
    ax.set_ylabel("idler frequency (THz)")
    ax.set_title("Photon-number covariance")
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


def render_gain(inputs, output):
    curve = load_table(inputs[0], ["power_mW", "flux"])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(np.atleast_1d(curve["power_mW"]),
                np.atleast_1d(curve["flux"]), "ko", label="simulated flux")
    if len(inputs) > 1:
        fits = load_table(inputs[1], ["power_mW", "rosenbluth_flux",
                                      "homogeneous_flux"])
        ax.semilogy(fits["power_mW"], fits["rosenbluth_flux"], "r-",
                    label=r"$A(e^{BP}-1)$")
        ax.semilogy(fits["power_mW"], fits["homogeneous_flux"], "g--",
                    label=r"$A\,\sinh^2(B\sqrt{P})$")
    ax.set_xlabel("pump power (mW)")
    ax.set_ylabel("photons per pulse in band")
    ax.set_title("Gain scaling with pump power")
    ax.legend()
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


def render_sfg(inputs, output):
    coarse = load_table(inputs[0], ["tau_fs", "intensity", "background"])
    fine = load_table(inputs[1] if len(inputs) > 1 else inputs[0],
                      ["tau_fs", "intensity", "background"])
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 4))
    left.plot(coarse["tau_fs"] * 1e-3, coarse["intensity"], "b-")
    left.plot(coarse["tau_fs"] * 1e-3, coarse["background"], "k:",
              label="pedestal")
    left.set_xlabel("delay (ps)")
    left.set_ylabel("SFG intensity (arb. units)")
    left.set_title("coarse scan")
    left.legend()
    right.plot(fine["tau_fs"], fine["intensity"], "b-")
    right.plot(fine["tau_fs"], fine["background"], "k:")
    right.set_xlabel("delay (fs)")
    right.set_title("fine scan")
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


RENDERERS = {
    "grating": (render_grating, 1),
    "spectrum": (render_spectrum, 1),
    "covariance": (render_covariance, 1),
    "gain": (render_gain, 1),
    "sfg": (render_sfg, 1),
}


def render(figure_id, inputs, output):
    """Dispatch one figure; raises SchemaError on malformed input."""
    if figure_id not in RENDERERS:
        raise SchemaError(f"unknown figure id {figure_id!r}; "
                          f"choose from {sorted(RENDERERS)}")
    func, min_inputs = RENDERERS[figure_id]
    if len(inputs) < min_inputs:
        raise SchemaError(f"{figure_id} needs at least {min_inputs} "
                          "--in file(s)")
    func(inputs, output)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="chirppdc-render",
        description="Render a figure from chirppdc CSV artifacts")
    parser.add_argument("figure_id", choices=sorted(RENDERERS))
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="CSV", help="input CSV (repeatable)")
    parser.add_argument("--out", required=True, metavar="IMAGE",
                        help="output image path (png, pdf, svg)")
    args = parser.parse_args(argv)
    try:
        render(args.figure_id, args.inputs, args.out)
    except (SchemaError, OSError) as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
