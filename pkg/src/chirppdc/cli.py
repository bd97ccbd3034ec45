"""Command-line pipeline: one config file, one subcommand per artifact.

Every subcommand writes CSV artifacts plus a JSON metadata sidecar
(atomically, write-then-rename) and prints a single machine-parseable
key=value summary line.  Exit codes: 0 success, 2 config/validation
failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .bogolyubov import (GridSolveError, StepUnderflowError, solve_grid,
                         solve_one, SolverConfig, DetuningGrid)
from .config import (ConfigError, apply_overrides, build_dispersion,
                     build_freqs, build_grid, build_profile, build_solver,
                     load_config, output_directory)
from .dispersion import WavelengthRangeError, signal_wavelength_nm
from .gainfit import (FitConvergenceError, GainBandError, GainCurve,
                      HOMOGENEOUS, ROSENBLUTH, fit_model, gain_exponent,
                      model_flux, peak_exponent, simulate_gain_curve)
from .grating import k_profile, k_span, phase_integral
from .observables import (bandwidth, covariance_map, mode_ratio, peak_metrics,
                          sample_pulse_ensemble, sfg_trace, spectrum,
                          stripe_mass_fraction, SpectrometerBins,
                          UndefinedBandwidthError, NoResolvablePeakError,
                          SfgAliasingError, GridSymmetryError, StripeError,
                          EnsembleSizeError)

NUMERICAL_ERRORS = (GridSolveError, StepUnderflowError, WavelengthRangeError,
                    GainBandError, FitConvergenceError,
                    UndefinedBandwidthError, NoResolvablePeakError,
                    SfgAliasingError, GridSymmetryError, StripeError,
                    EnsembleSizeError, FloatingPointError)


def _fmt(x):
    """Shortest round-trip decimal form; byte-stable for equal doubles."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, columns):
    """Write a rectangular CSV with a header row, atomically."""
    n = len(columns[0])
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(_fmt(col[i]) for col in columns))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_sidecar(csv_path, cfg, extra=None):
    """JSON sidecar next to a CSV: config, seed, version, timestamp."""
    meta = {
        "version": f"chirppdc {__version__}",
        "config": cfg,
        "seed": cfg["observables"]["seed"],
        "ensemble_size": cfg["observables"]["ensemble"],
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if extra:
        meta.update(extra)
    path = os.path.splitext(csv_path)[0] + ".json"
    _atomic_write(path, json.dumps(meta, indent=2, default=str) + "\n")


def _summary(**kv):
    parts = []
    for k, v in kv.items():
        if isinstance(v, (bool, np.bool_)):
            parts.append(f"{k}={'true' if v else 'false'}")
        elif isinstance(v, (int, float, np.floating, np.integer)):
            parts.append(f"{k}={_fmt(v)}")
        else:
            parts.append(f"{k}={v}")
    print(" ".join(parts))


# -- subcommands ------------------------------------------------------------

def cmd_design(cfg, outdir, args):
    profile = build_profile(cfg)
    z = np.linspace(0.0, profile.length_mm, cfg["design"]["points"])
    k = k_profile(z, profile)
    phi = phase_integral(z, profile)
    path = os.path.join(outdir, "design.csv")
    write_csv(path, ["z_mm", "K_rad_per_mm", "phi_rad"], [z, k, phi])
    write_sidecar(path, cfg)
    _summary(artifact=path, k_start=k[0], k_end=k[-1],
             span=k_span(profile), phi_total=phi[-1])
    return 0


def cmd_spectrum(cfg, outdir, args):
    model = build_dispersion(cfg)
    freqs = build_freqs(cfg)
    profile = build_profile(cfg)
    solver = build_solver(cfg, workers=args.workers)
    field = solve_grid(solver, profile, model, freqs)
    spec = spectrum(field)
    path = os.path.join(outdir, "spectrum.csv")
    write_csv(path, ["detuning_THz", "wavelength_nm", "photons_per_mode"],
              [spec.frequency_thz(), spec.wavelength_nm(), spec.values])
    write_sidecar(path, cfg, {"coupling_g_mm": abs(field.coupling_g),
                              "nu0": field.nu0})
    signal = spec.positive_half() if field.is_mirror_symmetric() else spec
    _summary(artifact=path,
             bandwidth_rms_thz=bandwidth(signal, "rms"),
             bandwidth_fwhm_thz=bandwidth(signal, "fwhm_outer"),
             peak_photons_per_mode=spec.values.max(),
             symplectic_defect=field.symplectic_defect())

    if args.dump_trajectory is not None:
        om = args.dump_trajectory * 2e12 * np.pi
        _, _, traj = solve_one(om, solver, profile, model, freqs, record=True)
        tpath = os.path.join(outdir, "trajectory.csv")
        write_csv(tpath, ["z_mm", "re_A", "im_A", "re_B", "im_B"],
                  [[t[0] for t in traj],
                   [t[1].real for t in traj], [t[1].imag for t in traj],
                   [t[2].real for t in traj], [t[2].imag for t in traj]])
        write_sidecar(tpath, cfg, {"detuning_thz": args.dump_trajectory})
    return 0


def cmd_covariance(cfg, outdir, args):
    model = build_dispersion(cfg)
    freqs = build_freqs(cfg)
    profile = build_profile(cfg)
    obs = cfg["observables"]
    grid_cfg = obs["covariance_grid"] or cfg["solver"]["grid"]
    solver = build_solver(cfg, grid_cfg=grid_cfg, workers=args.workers)
    field = solve_grid(solver, profile, model, freqs)

    if obs["bin_width_thz"]:
        bins = SpectrometerBins.cover(field, bin_width_thz=obs["bin_width_thz"])
    else:
        bins = SpectrometerBins.cover(field, n_bins=obs["bins"] or 100)
    ens = sample_pulse_ensemble(field, obs["ensemble"], obs["efficiency"],
                                obs["seed"], bins)
    cmap = covariance_map(ens)
    ratio = mode_ratio(cmap)

    ns = cmap.n_signal
    sig_idx, idl_idx = np.meshgrid(np.arange(ns), np.arange(ns), indexing="ij")
    path = os.path.join(outdir, "covariance.csv")
    write_csv(path, ["signal_THz", "idler_THz", "cov", "mean_s", "mean_i"],
              [cmap.signal_axis_thz[sig_idx.ravel()],
               cmap.idler_axis_thz[idl_idx.ravel()],
               cmap.cross.ravel(),
               cmap.means_signal[sig_idx.ravel()],
               cmap.means_idler[idl_idx.ravel()]])
    write_sidecar(path, cfg, {"bin_width_thz": cmap.bin_width_thz,
                              "n_bins": ns})
    _summary(artifact=path, mode_ratio=ratio.ratio,
             lower_bound=ratio.lower_bound,
             total_width_thz=ratio.total_width_thz,
             section_width_thz=ratio.section_width_thz,
             stripe_fraction=stripe_mass_fraction(cmap))
    return 0


def cmd_sfg(cfg, outdir, args):
    model = build_dispersion(cfg)
    freqs = build_freqs(cfg)
    profile = build_profile(cfg)
    obs = cfg["observables"]
    grid_cfg = obs["sfg_grid"] or cfg["solver"]["grid"]
    g = float(np.sqrt(cfg["gain"]["calibration"] * obs["sfg_power_mw"]))
    solver = build_solver(cfg, grid_cfg=grid_cfg, coupling_g=g,
                          workers=args.workers)
    field = solve_grid(solver, profile, model, freqs)

    t0, t1, dt = obs["tau_coarse_ps"]
    coarse_fs = np.arange(t0, t1 + dt / 2, dt) * 1e3
    t0, t1, dt = obs["tau_fine_fs"]
    fine_fs = np.arange(t0, t1 + dt / 2, dt)

    coarse = sfg_trace(field, coarse_fs, obs["pulse_fwhm_ps"])
    fine = sfg_trace(field, fine_fs, obs["pulse_fwhm_ps"])
    for name, tr in (("sfg_coarse", coarse), ("sfg_fine", fine)):
        path = os.path.join(outdir, f"{name}.csv")
        write_csv(path, ["tau_fs", "intensity", "background"],
                  [tr.delays_fs, tr.intensity,
                   tr.envelope * tr.background_level])
        write_sidecar(path, cfg, {"power_mw": obs["sfg_power_mw"],
                                  "peak_exponent": peak_exponent(field)})
    met = peak_metrics(fine)
    _summary(artifact=os.path.join(outdir, "sfg_fine.csv"),
             peak_fwhm_fs=met.fwhm_fs, asymmetry=met.asymmetry,
             peak_tau_fs=met.tau_peak_fs,
             peak_to_background=met.peak_to_background,
             background_level=fine.background_level)
    return 0


def _write_fit_artifacts(cfg, outdir, curve, prefix):
    fits = {m: fit_model(curve, m) for m in (ROSENBLUTH, HOMOGENEOUS)}
    p_fine = np.linspace(curve.powers_mw.min(), curve.powers_mw.max(), 200)
    path = os.path.join(outdir, f"{prefix}_fits.csv")
    write_csv(path, ["power_mW", "rosenbluth_flux", "homogeneous_flux"],
              [p_fine,
               model_flux(ROSENBLUTH, p_fine, fits[ROSENBLUTH].amplitude,
                          fits[ROSENBLUTH].rate),
               model_flux(HOMOGENEOUS, p_fine, fits[HOMOGENEOUS].amplitude,
                          fits[HOMOGENEOUS].rate)])
    write_sidecar(path, cfg, {
        "fits": {
            m: {
                "amplitude": f.amplitude,
                "rate": f.rate,
                "residual_norm": f.residual_norm,
                "physical_amplitude": f.physicality_flag,
                "covariance": np.asarray(f.covariance).tolist(),
            } for m, f in fits.items()
        },
    })
    return fits


def cmd_gain_scan(cfg, outdir, args):
    model = build_dispersion(cfg)
    freqs = build_freqs(cfg)
    profile = build_profile(cfg)
    gain = cfg["gain"]
    solver = cfg["solver"]
    curve = simulate_gain_curve(
        gain["powers_mw"], tuple(gain["band_nm"]), profile,
        grid=build_grid(gain["grid"]), dispersion=model, freqs=freqs,
        calibration=gain["calibration"],
        pulse_fwhm_ps=cfg["observables"]["pulse_fwhm_ps"],
        rtol=solver["rtol"], atol=solver["atol"],
        workers=args.workers if args.workers else solver["workers"],
    )
    path = os.path.join(outdir, "gain_curve.csv")
    write_csv(path, ["power_mW", "flux"], [curve.powers_mw, curve.flux])
    write_sidecar(path, cfg, {"band_nm": list(curve.band_nm)})
    fits = _write_fit_artifacts(cfg, outdir, curve, "gain")
    fr, fh = fits[ROSENBLUTH], fits[HOMOGENEOUS]
    _summary(artifact=path,
             rosenbluth_A=fr.amplitude, rosenbluth_B=fr.rate,
             gain_exponent_15mw=gain_exponent(fr, 15.0),
             homogeneous_A=fh.amplitude,
             residual_rosenbluth=fr.residual_norm,
             residual_homogeneous=fh.residual_norm)
    return 0


def cmd_fit(cfg, outdir, args):
    if not args.data or not os.path.exists(args.data):
        raise ConfigError(f"fit needs --data pointing at a CSV file "
                          f"(got {args.data!r})")
    table = np.genfromtxt(args.data, delimiter=",", names=True)
    cols = table.dtype.names
    if cols is None or len(cols) < 2:
        raise ConfigError(f"{args.data}: expected a CSV header with at "
                          "least two columns (power, flux)")
    curve = GainCurve(np.atleast_1d(np.asarray(table[cols[0]], dtype=float)),
                      np.atleast_1d(np.asarray(table[cols[1]], dtype=float)),
                      band_nm=tuple(cfg["gain"]["band_nm"]))
    fits = _write_fit_artifacts(cfg, outdir, curve, "fit")
    fr, fh = fits[ROSENBLUTH], fits[HOMOGENEOUS]
    _summary(artifact=os.path.join(outdir, "fit_fits.csv"),
             rosenbluth_A=fr.amplitude, rosenbluth_B=fr.rate,
             homogeneous_A=fh.amplitude,
             residual_rosenbluth=fr.residual_norm,
             residual_homogeneous=fh.residual_norm,
             rosenbluth_physical=fr.physicality_flag,
             homogeneous_physical=fh.physicality_flag)
    return 0


COMMANDS = {
    "design": cmd_design,
    "spectrum": cmd_spectrum,
    "gain-scan": cmd_gain_scan,
    "covariance": cmd_covariance,
    "sfg": cmd_sfg,
    "fit": cmd_fit,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chirppdc",
        description="Forward simulator for broadband twin beams from "
                    "aperiodically poled lithium niobate",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="YAML config (defaults built in)")
    parser.add_argument("--set", dest="overrides", action="append",
                        metavar="KEY=VALUE",
                        help="override a config entry, e.g. solver.nu0=0.2")
    parser.add_argument("--out", help="output directory "
                        "(default: config, then $CHIRPPDC_OUTDIR, then ./runs)")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes (results are independent of this)")
    parser.add_argument("--data", help="input CSV of (power, flux) for `fit`")
    parser.add_argument("--dump-trajectory", type=float, default=None,
                        metavar="OMEGA_THZ",
                        help="with `spectrum`: dump the per-step trajectory "
                             "at this detuning (THz)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, args.overrides)
        outdir = output_directory(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, outdir, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
