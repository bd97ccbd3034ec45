"""Gain curves vs pump power and the two rival gain laws.

In the aperiodically poled crystal the photon number per mode grows as
N = A (exp(B P) - 1) with A of order one (gain exponent linear in pump
POWER); a homogeneous crystal would follow N = A sinh^2(B sqrt(P))
(exponent linear in pump amplitude).  Fitting both to a simulated or
measured curve discriminates the regimes: forcing the homogeneous law
onto power-law-exponent data drives its amplitude to unphysically small
values.

The pump power enters the solver through |g|^2 = c * P.  The default
calibration constant is chosen so that a 15 mW pump drives the most
amplified mode to the gain exponent ln(1 + N_peak) = 18, the simulator's
reference operating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .bogolyubov import SolverConfig, solve_grid
from .dispersion import C_NM_S, DispersionModel, InteractionFrequencies
from .grating import GratingProfile

ROSENBLUTH = "rosenbluth"
HOMOGENEOUS = "homogeneous"

# |g|^2 = POWER_COUPLING * P; mm^-2 per mW.  Calibrated on the paper-design
# grating so that ln(1 + peak photons per mode) = 18.0 at P = 15 mW.
DEFAULT_POWER_COUPLING = 2.3805120560520026
CAL_POWER_MW = 15.0
CAL_EXPONENT = 18.0

# physicality window for the Rosenbluth amplitude ("A of order one")
PHYSICAL_AMPLITUDE = (0.01, 100.0)


class GainBandError(ValueError):
    """Requested wavelength band has no support on the solver grid."""


class WrongModelError(ValueError):
    """Operation applies to a different fit model."""


class FitConvergenceError(RuntimeError):
    """No simplex start converged; carries the best iterate found."""

    def __init__(self, best):
        self.best = best
        super().__init__("fit did not converge; best iterate attached")


@dataclass(frozen=True)
class GainCurve:
    """Band-integrated photon flux vs pump power (arbitrary per-pulse units)."""

    powers_mw: np.ndarray
    flux: np.ndarray
    band_nm: tuple

    def __post_init__(self):
        p = np.asarray(self.powers_mw, dtype=float)
        if np.any(np.diff(p) <= 0):
            raise ValueError("powers must be strictly increasing")
        if np.any(np.asarray(self.flux) < 0):
            raise ValueError("flux must be non-negative")


@dataclass
class FitResult:
    model: str
    amplitude: float              # A
    rate: float                   # B, per mW (rosenbluth) or per sqrt(mW)
    residual_norm: float          # RMS log residual
    covariance: np.ndarray        # 2x2 for (A, B)
    physicality_flag: bool        # A inside PHYSICAL_AMPLITUDE
    n_points: int


def model_flux(model, powers_mw, amplitude, rate):
    """Evaluate either gain law; amplitude and rate positive."""
    p = np.asarray(powers_mw, dtype=float)
    if model == ROSENBLUTH:
        return amplitude * np.expm1(np.minimum(rate * p, 700.0))
    if model == HOMOGENEOUS:
        return amplitude * np.sinh(np.minimum(rate * np.sqrt(p), 350.0)) ** 2
    raise ValueError(f"unknown gain model {model!r}")


def band_flux(bog_field, band_nm, pulse_fwhm_ps=18.0):
    """Photons per pulse within a wavelength band (nm).

    Integrates the per-mode occupation over the band and converts to a
    photon count with the pulse's mode density t_p / (2 pi) per unit
    angular frequency.  The band may sit on either side of degeneracy;
    raises GainBandError when fewer than two grid points fall inside it.
    """
    lam = np.asarray(
        2.0 * np.pi * C_NM_S / (bog_field.freqs.omega0 + bog_field.detunings)
    )
    lo, hi = min(band_nm), max(band_nm)
    mask = (lam >= lo) & (lam <= hi)
    if mask.sum() < 2:
        raise GainBandError(
            f"band [{lo:g}, {hi:g}] nm covers {int(mask.sum())} grid point(s); "
            "need at least 2"
        )
    om = bog_field.detunings[mask]
    n = bog_field.photons_per_mode()[mask]
    order = np.argsort(om)
    modes_per_rad_s = pulse_fwhm_ps * 1e-12 / (2.0 * np.pi)
    return float(np.trapezoid(n[order], om[order]) * modes_per_rad_s)


def simulate_gain_curve(powers_mw, band_nm, profile=None, grid=None,
                        dispersion=DispersionModel(),
                        freqs=InteractionFrequencies(),
                        calibration=DEFAULT_POWER_COUPLING,
                        pulse_fwhm_ps=18.0,
                        rtol=1e-10, atol=1e-12, workers=1):
    """Forward-simulate photons per pulse in a band for each pump power (mW).

    |g|^2 = calibration * P; P = 0 gives zero coupling and zero flux.
    """
    if calibration <= 0:
        raise ValueError("calibration constant must be positive")
    profile = profile or GratingProfile.paper_design()
    if grid is None:
        raise ValueError("a DetuningGrid covering the band is required")
    powers = np.asarray(powers_mw, dtype=float)
    flux = np.empty(powers.size)
    for i, p_mw in enumerate(powers):
        g = float(np.sqrt(calibration * p_mw))
        cfg = SolverConfig(grid=grid, coupling_g=g, rtol=rtol, atol=atol,
                           workers=workers)
        fld = solve_grid(cfg, profile, dispersion, freqs)
        flux[i] = band_flux(fld, band_nm, pulse_fwhm_ps)
    return GainCurve(powers_mw=powers, flux=flux, band_nm=tuple(band_nm))


def _log_residuals(params, model, powers, flux):
    amplitude, rate = params
    if amplitude <= 0 or rate <= 0:
        return None
    pred = model_flux(model, powers, amplitude, rate)
    if np.any(pred <= 0) or not np.all(np.isfinite(pred)):
        return None
    return np.log(pred) - np.log(flux)


def _objective(log_params, model, powers, flux):
    r = _log_residuals(np.exp(log_params), model, powers, flux)
    if r is None:
        return 1e300
    return float(np.dot(r, r))


def _start_grid(model, powers, flux):
    """Deterministic multi-start seeds from crude slope estimates."""
    i_hi = int(np.argmax(flux))
    i_md = max(0, i_hi // 2)
    if i_md == i_hi:
        i_md = max(0, i_hi - 1)
    if model == ROSENBLUTH:
        x_hi, x_md = powers[i_hi], powers[i_md]
    else:
        x_hi, x_md = 2 * np.sqrt(powers[i_hi]), 2 * np.sqrt(powers[i_md])
    rate0 = (np.log(flux[i_hi]) - np.log(flux[i_md])) / max(x_hi - x_md, 1e-12)
    rate0 = max(rate0, 1e-6)
    starts = []
    for f_rate in (0.5, 1.0, 2.0):
        rate = rate0 * f_rate
        pred = model_flux(model, powers, 1.0, rate)
        amp0 = flux[i_hi] / max(pred[i_hi], 1e-300)
        for f_amp in (0.1, 1.0, 10.0):
            starts.append((max(amp0 * f_amp, 1e-300), rate))
    return starts


def _fit_covariance(model, powers, flux, amplitude, rate):
    """Gauss-Newton covariance of (A, B) from the log-residual Jacobian."""
    n = powers.size
    jac = np.empty((n, 2))
    for col, (da, db) in enumerate([(1e-6 * amplitude, 0.0),
                                    (0.0, 1e-6 * rate)]):
        hi = _log_residuals((amplitude + da, rate + db), model, powers, flux)
        lo = _log_residuals((amplitude - da, rate - db), model, powers, flux)
        if hi is None or lo is None:
            return np.full((2, 2), np.nan)
        jac[:, col] = (hi - lo) / (2.0 * max(da + db, 1e-300))
    r = _log_residuals((amplitude, rate), model, powers, flux)
    dof = max(n - 2, 1)
    sigma2 = float(np.dot(r, r)) / dof
    try:
        return sigma2 * np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        return np.full((2, 2), np.nan)


def fit_model(curve, model):
    """Least-squares fit of one gain law on log-transformed residuals.

    Derivative-free simplex descent from a deterministic grid of starts;
    returns the best start.  Points with zero flux are excluded (the log
    residual is undefined there).
    """
    keep = np.asarray(curve.flux) > 0
    powers = np.asarray(curve.powers_mw, dtype=float)[keep]
    flux = np.asarray(curve.flux, dtype=float)[keep]
    if powers.size < 4:
        raise ValueError("need at least 4 positive-flux points to fit")

    best = None
    converged = False
    for amp0, rate0 in _start_grid(model, powers, flux):
        res = minimize(_objective, np.log([amp0, rate0]),
                       args=(model, powers, flux), method="Nelder-Mead",
                       options={"maxiter": 4000, "xatol": 1e-12,
                                "fatol": 1e-14})
        if best is None or res.fun < best.fun:
            best = res
        converged = converged or bool(res.success)

    amplitude, rate = np.exp(best.x)
    result = FitResult(
        model=model,
        amplitude=float(amplitude),
        rate=float(rate),
        residual_norm=float(np.sqrt(best.fun / powers.size)),
        covariance=_fit_covariance(model, powers, flux, amplitude, rate),
        physicality_flag=bool(
            PHYSICAL_AMPLITUDE[0] <= amplitude <= PHYSICAL_AMPLITUDE[1]
        ),
        n_points=int(powers.size),
    )
    if not converged:
        raise FitConvergenceError(result)
    return result


def gain_exponent(fit, power_mw):
    """Gain exponent G = B * P of a Rosenbluth fit at the given power."""
    if fit.model != ROSENBLUTH:
        raise WrongModelError("gain exponent is defined for the rosenbluth fit")
    return float(fit.rate * power_mw)


def peak_exponent(bog_field):
    """ln(1 + N_peak): per-mode gain exponent of the strongest mode."""
    return float(np.log1p(bog_field.photons_per_mode().max()))


def calibrate_power_coupling(profile=None, grid=None,
                             dispersion=DispersionModel(),
                             freqs=InteractionFrequencies(),
                             target_exponent=CAL_EXPONENT,
                             power_mw=CAL_POWER_MW,
                             rtol=1e-10, atol=1e-12, workers=1):
    """Re-derive the power coupling c: peak exponent = target at power_mw.

    Root find on ln(c); each iteration is one grid solve.  Used to pin
    DEFAULT_POWER_COUPLING; slow, not needed in normal runs.
    """
    from scipy.optimize import brentq

    profile = profile or GratingProfile.paper_design()
    if grid is None:
        raise ValueError("a DetuningGrid covering the gain peak is required")

    def exponent_of(c):
        g = float(np.sqrt(c * power_mw))
        cfg = SolverConfig(grid=grid, coupling_g=g, rtol=rtol, atol=atol,
                           workers=workers)
        return peak_exponent(solve_grid(cfg, profile, dispersion, freqs))

    c0 = DEFAULT_POWER_COUPLING
    root = brentq(lambda lc: exponent_of(np.exp(lc)) - target_exponent,
                  np.log(c0 / 3), np.log(c0 * 3), xtol=1e-5)
    return float(np.exp(root))
