"""Extraordinary-wave dispersion of MgO-doped congruent lithium niobate.

Refractive index follows the temperature-dependent Sellmeier fit of
Gayer, Sacks, Galun and Arie, Appl. Phys. B 91, 343-348 (2008) for the
extraordinary axis of 5% MgO-doped congruent LiNbO3 (their Eq. (1),
Table 2).  All three interacting waves are extraordinary-polarized
(type-0), so no ordinary-axis branch is provided.

Units: wavelengths in um (nm where noted), angular frequencies in rad/s,
wavevectors in rad/mm, temperature in kelvin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as _C_M_S

C_MM_S = _C_M_S * 1e3   # speed of light, mm/s
C_UM_S = _C_M_S * 1e6   # speed of light, um/s
C_NM_S = _C_M_S * 1e9   # speed of light, nm/s

# Gayer 2008, extraordinary axis, 5% MgO-doped congruent LiNbO3:
# n^2 = a1 + b1 f + (a2 + b2 f)/(lam^2 - (a3 + b3 f)^2)
#       + (a4 + b4 f)/(lam^2 - a5^2) - a6 lam^2,
# lam in um, f = (T - 24.5)(T + 570.82), T in deg C.
GAYER2008_E_MGO5_CLN = (
    5.756, 0.0983, 0.2020, 189.32, 12.52, 1.32e-2,
    2.860e-6, 4.7e-8, 6.113e-8, 1.516e-4,
)


class WavelengthRangeError(ValueError):
    """Wavelength outside the validity window of the Sellmeier fit."""


@dataclass(frozen=True)
class DispersionModel:
    """Sellmeier model for the extraordinary index n_e(lambda, T).

    coefficients: (a1..a6, b1..b4) of the Gayer-form fit.
    temperature_k: crystal temperature in kelvin.
    valid_range_um: wavelength validity window of the fit, in um.
    """

    formula: str = "gayer2008_e_mgo5_cln"
    coefficients: tuple = GAYER2008_E_MGO5_CLN
    temperature_k: float = 298.15
    valid_range_um: tuple = (0.5, 4.0)

    def __post_init__(self):
        if len(self.coefficients) != 10:
            raise ValueError("expected 10 Sellmeier coefficients (a1..a6, b1..b4)")
        lo, hi = self.valid_range_um
        if not 0 < lo < hi:
            raise ValueError("valid_range_um must be an increasing positive interval")


@dataclass(frozen=True)
class InteractionFrequencies:
    """Pump and degenerate-point frequencies of the down-conversion.

    omega0 is half the pump angular frequency; a detuning Omega labels the
    signal/idler pair at omega0 +/- Omega.
    """

    pump_wavelength_nm: float = 532.0

    @property
    def pump_omega(self):
        """Pump angular frequency omega_p, rad/s."""
        return 2.0 * np.pi * C_NM_S / self.pump_wavelength_nm

    @property
    def omega0(self):
        """Half the pump angular frequency, rad/s."""
        return np.pi * C_NM_S / self.pump_wavelength_nm


def _check_range(wavelength_um, model):
    lo, hi = model.valid_range_um
    lam = np.asarray(wavelength_um, dtype=float)
    if np.any(lam < lo) or np.any(lam > hi):
        raise WavelengthRangeError(
            f"wavelength {lam[(lam < lo) | (lam > hi)].flat[0]:.4g} um outside "
            f"the Sellmeier validity range [{lo:g}, {hi:g}] um"
        )


def refractive_index(wavelength_um, model=DispersionModel()):
    """Extraordinary refractive index n_e at the model temperature.

    wavelength_um may be a scalar or array; raises WavelengthRangeError
    outside model.valid_range_um.
    """
    _check_range(wavelength_um, model)
    lam = np.asarray(wavelength_um, dtype=float)
    a1, a2, a3, a4, a5, a6, b1, b2, b3, b4 = model.coefficients
    t_c = model.temperature_k - 273.15
    f = (t_c - 24.5) * (t_c + 570.82)
    lam2 = lam * lam
    n2 = (a1 + b1 * f
          + (a2 + b2 * f) / (lam2 - (a3 + b3 * f) ** 2)
          + (a4 + b4 * f) / (lam2 - a5 ** 2)
          - a6 * lam2)
    n = np.sqrt(n2)
    return n if n.ndim else float(n)


def wavelength_um(omega, freqs=None):
    """Vacuum wavelength in um for angular frequency omega (rad/s)."""
    om = np.asarray(omega, dtype=float)
    lam = 2.0 * np.pi * C_UM_S / om
    return lam if lam.ndim else float(lam)


def wavenumber(omega, model=DispersionModel()):
    """Wavevector k = n_e(lambda) * omega / c in rad/mm."""
    om = np.asarray(omega, dtype=float)
    n = refractive_index(2.0 * np.pi * C_UM_S / om, model)
    k = n * om / C_MM_S
    return k if np.ndim(k) else float(k)


def mismatch(detuning, model=DispersionModel(), freqs=InteractionFrequencies()):
    """Collinear wavevector mismatch Delta(Omega) in rad/mm.

    Delta(Omega) = k_p - k(omega0 + Omega) - k(omega0 - Omega); even in
    Omega by construction.  Raises WavelengthRangeError if either sideband
    leaves the Sellmeier validity window.
    """
    om = np.asarray(detuning, dtype=float)
    kp = wavenumber(freqs.pump_omega, model)
    # sum the sidebands first: addition commutes, so Delta(-Omega) is
    # bit-identical to Delta(Omega)
    d = kp - (wavenumber(freqs.omega0 + om, model)
              + wavenumber(freqs.omega0 - om, model))
    return d if np.ndim(d) else float(d)


def signal_wavelength_nm(detuning, freqs=InteractionFrequencies()):
    """Wavelength (nm) of the sideband at omega0 + Omega."""
    om = np.asarray(detuning, dtype=float)
    lam = 2.0 * np.pi * C_NM_S / (freqs.omega0 + om)
    return lam if lam.ndim else float(lam)


def detuning_bounds(model=DispersionModel(), freqs=InteractionFrequencies()):
    """Largest |Omega| (rad/s) keeping both sidebands inside the valid range."""
    lo, hi = model.valid_range_um
    om_lo = 2.0 * np.pi * C_UM_S / hi   # smallest valid angular frequency
    om_hi = 2.0 * np.pi * C_UM_S / lo
    return min(freqs.omega0 - om_lo, om_hi - freqs.omega0)
