"""Observables computed from the solved coefficients A(Omega, L), B(Omega, L).

Covers the per-mode spectrum and its width, Monte-Carlo photon-number
statistics over a pulse ensemble (spectral covariance, mode-count ratio),
and the sum-frequency cross-correlation trace

    I(tau) = env(tau) * 8 [int |B|^2 dOmega]^2
             + 4 |int A B exp(i(Omega tau - Delta L)) dOmega|^2,

whose first term is the incoherent pedestal and second the coherent peak.

The pulse ensemble is sampled from the exact pair statistics of two-mode
squeezed vacuum: each conjugate pair (Omega, -Omega) carries a common
photon number n with P(n) = Nbar^n / (1+Nbar)^(n+1), Nbar = |B|^2, followed
by independent binomial thinning per arm for detection efficiency.  This
reproduces the thermal per-mode variance Nbar(Nbar+1), the exact twin
correlation at unit efficiency, and the pair covariance |A|^2 |B|^2.
Per-pulse counter-based RNG streams keyed by (seed, pulse index) make the
results independent of scheduling and worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dispersion import mismatch, signal_wavelength_nm


class UndefinedBandwidthError(ValueError):
    """Spectrum has no positive maximum; width undefined."""


class GridSymmetryError(ValueError):
    """Grid is not symmetric about zero detuning (conjugate pairs missing)."""


class EnsembleSizeError(ValueError):
    """Fewer than two pulses; covariance undefined."""


class SfgAliasingError(ValueError):
    """Requested delay exceeds the grid's unaliased range pi/dOmega."""


class NoResolvablePeakError(ValueError):
    """SFG trace has no resolvable coherent peak."""


class StripeError(ValueError):
    """Covariance map has no resolvable correlation stripe."""


# ---------------------------------------------------------------------------
# spectrum and bandwidth
# ---------------------------------------------------------------------------

@dataclass
class Spectrum:
    """Per-mode photon spectrum N(Omega) = |B(Omega, L)|^2."""

    detunings: np.ndarray       # rad/s, ascending
    values: np.ndarray          # photons per mode
    freqs: object               # InteractionFrequencies (wavelength axis)
    meta: dict = field(default_factory=dict)

    def frequency_thz(self):
        """Detuning as ordinary frequency, THz."""
        return self.detunings / (2.0 * np.pi * 1e12)

    def wavelength_nm(self):
        """Vacuum wavelength of the sideband at omega0 + Omega, nm."""
        return signal_wavelength_nm(self.detunings, self.freqs)

    def positive_half(self):
        """The signal-side (Omega > 0) part of the spectrum."""
        keep = self.detunings > 0
        return Spectrum(self.detunings[keep], self.values[keep],
                        self.freqs, dict(self.meta))


def spectrum(bog_field):
    """Pointwise |B|^2 over the field's grid, with provenance copied."""
    meta = {
        "coupling_g": bog_field.coupling_g,
        "nu0": bog_field.nu0,
        "rtol": bog_field.rtol,
        "atol": bog_field.atol,
        "grating_kind": bog_field.profile.kind,
    }
    return Spectrum(bog_field.detunings.copy(), bog_field.photons_per_mode(),
                    bog_field.freqs, meta)


def _outer_half_crossings(x, y):
    """Outermost half-maximum crossings, linearly interpolated.

    Falls back to the grid edge on a side where the curve never drops
    below half maximum.
    """
    half = y.max() / 2.0
    above = y >= half
    i0 = int(np.argmax(above))
    i1 = len(y) - 1 - int(np.argmax(above[::-1]))
    if i0 > 0:
        x_lo = np.interp(half, [y[i0 - 1], y[i0]], [x[i0 - 1], x[i0]])
    else:
        x_lo = x[0]
    if i1 < len(y) - 1:
        x_hi = np.interp(half, [y[i1 + 1], y[i1]], [x[i1 + 1], x[i1]])
    else:
        x_hi = x[-1]
    return float(x_lo), float(x_hi)


def bandwidth(spec, method="fwhm_outer"):
    """Spectral width in THz.

    fwhm_outer: distance between the outermost half-maximum crossings.
    rms: Gaussian-equivalent FWHM, 2.3548 x the standard deviation of the
    normalized spectral density (robust for tilted broadband shapes).
    """
    y = np.asarray(spec.values, dtype=float)
    if y.size < 2 or not np.any(y > 0):
        raise UndefinedBandwidthError("spectrum has no positive maximum")
    x = spec.frequency_thz()
    if method == "fwhm_outer":
        lo, hi = _outer_half_crossings(x, y)
        return hi - lo
    if method == "rms":
        norm = np.trapezoid(y, x)
        mu = np.trapezoid(y * x, x) / norm
        var = np.trapezoid(y * (x - mu) ** 2, x) / norm
        return float(2.3548 * np.sqrt(var))
    raise ValueError(f"unknown bandwidth method {method!r}")


# ---------------------------------------------------------------------------
# pulse-ensemble sampling and spectral covariance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrometerBins:
    """Rectangular spectrometer bins, conjugate-aligned on both arms.

    edges are ascending detunings (rad/s) over the positive half; signal
    bin i collects modes with Omega in [edges[i], edges[i+1]) and idler
    bin i the mirrored -Omega interval.
    """

    edges: np.ndarray

    @property
    def n_bins(self):
        return self.edges.size - 1

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def width_thz(self):
        return float((self.edges[1] - self.edges[0]) / (2.0 * np.pi * 1e12))

    @classmethod
    def cover(cls, bog_field, n_bins=None, bin_width_thz=None):
        """Uniform bins covering the positive-detuning band of the field."""
        pos = bog_field.detunings[bog_field.detunings > 0]
        lo, hi = pos.min(), pos.max()
        if hi == lo:
            # single mode: one nominal-width bin centred on it
            half = np.pi * 1e12 * (bin_width_thz or 0.1)
            return cls(np.linspace(lo - half, hi + half, (n_bins or 1) + 1))
        if bin_width_thz is not None:
            w = 2.0 * np.pi * bin_width_thz * 1e12
            n_bins = max(1, int(np.ceil((hi - lo) / w)))
            hi = lo + n_bins * w
        elif n_bins is None:
            n_bins = 100
        return cls(np.linspace(lo, hi, n_bins + 1))


@dataclass
class PulseEnsemble:
    """Raw per-pulse binned photon numbers for both arms."""

    signal: np.ndarray            # (n_pulses, n_bins)
    idler: np.ndarray             # (n_pulses, n_bins)
    bins: SpectrometerBins
    efficiency: float
    seed: int
    freqs: object
    pair_occupation: np.ndarray   # Nbar per conjugate pair (diagnostic)


def _conjugate_pairs(bog_field, rel_tol=1e-6):
    """Positive detunings and the pair occupation (|B+|^2 + |B-|^2)/2.

    Validates |B(Omega)| = |B(-Omega)| instead of assuming it.
    """
    if not bog_field.is_mirror_symmetric():
        raise GridSymmetryError(
            "pulse sampling needs a grid symmetric about zero detuning "
            "(every Omega paired with -Omega)"
        )
    n_half = bog_field.detunings.size // 2
    pos = bog_field.detunings[n_half:]
    n_pos = np.abs(bog_field.B[n_half:]) ** 2
    n_neg = np.abs(bog_field.B[:n_half][::-1]) ** 2
    rel = np.abs(n_pos - n_neg) / (1.0 + np.maximum(n_pos, n_neg))
    if np.max(rel, initial=0.0) > rel_tol:
        raise GridSymmetryError(
            f"|B(Omega)| != |B(-Omega)| beyond tolerance "
            f"(max relative mismatch {np.max(rel):.3g})"
        )
    return pos, 0.5 * (n_pos + n_neg)


def _pulse_rng(seed, pulse_index):
    """Counter-based stream keyed by (seed, pulse index)."""
    key = np.array([seed, pulse_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_pulse_ensemble(bog_field, n_pulses, efficiency=1.0, seed=0,
                          bins=None):
    """Monte-Carlo ensemble of binned photon numbers over both arms.

    For each pulse and conjugate pair, a common photon number is drawn
    from the exact pair distribution P(n) = Nbar^n/(1+Nbar)^(n+1) with
    Nbar = |B|^2, then each arm is thinned binomially with the detection
    efficiency and summed into the spectrometer bins.
    """
    if n_pulses < 2:
        raise EnsembleSizeError("need at least 2 pulses for covariance")
    if not 0.0 <= efficiency <= 1.0:
        raise ValueError("efficiency must lie in [0, 1]")
    pos, nbar = _conjugate_pairs(bog_field)
    if bins is None:
        bins = SpectrometerBins.cover(bog_field)

    idx = np.searchsorted(bins.edges, pos, side="right") - 1
    # modes sitting exactly on the top edge belong to the last bin
    idx = np.where(pos == bins.edges[-1], bins.n_bins - 1, idx)
    in_range = (idx >= 0) & (idx < bins.n_bins)
    idx = idx[in_range]
    p_geom = 1.0 / (1.0 + nbar[in_range])
    n_modes = idx.size

    sig = np.empty((n_pulses, bins.n_bins))
    idl = np.empty((n_pulses, bins.n_bins))
    for p in range(n_pulses):
        rng = _pulse_rng(seed, p)
        n = rng.geometric(p_geom) - 1 if n_modes else np.zeros(0, dtype=np.int64)
        if efficiency < 1.0:
            s = rng.binomial(n, efficiency)
            i = rng.binomial(n, efficiency)
        else:
            s = n
            i = n
        sig[p] = np.bincount(idx, weights=s, minlength=bins.n_bins)
        idl[p] = np.bincount(idx, weights=i, minlength=bins.n_bins)

    return PulseEnsemble(signal=sig, idler=idl, bins=bins,
                         efficiency=efficiency, seed=seed,
                         freqs=bog_field.freqs, pair_occupation=nbar[in_range])


@dataclass
class CovarianceMap:
    """Empirical photon-number covariance over [signal bins; idler bins].

    cov is the full (ns+ni) x (ns+ni) covariance of the concatenated bin
    vector; the signal x idler cross block is the correlation stripe.
    Axes are absolute optical frequencies in THz.
    """

    cov: np.ndarray
    signal_axis_thz: np.ndarray   # bin centers, ascending detuning
    idler_axis_thz: np.ndarray    # conjugate bin centers (same ordering)
    signal_edges_thz: np.ndarray
    idler_edges_thz: np.ndarray
    means_signal: np.ndarray
    means_idler: np.ndarray
    bin_width_thz: float
    ensemble_size: int
    detection_efficiency: float

    @property
    def n_signal(self):
        return self.means_signal.size

    @property
    def cross(self):
        """Signal x idler covariance block (the stripe of interest)."""
        ns = self.n_signal
        return self.cov[:ns, ns:]


def covariance_map(ensemble, freqs=None):
    """Empirical covariance over the pulse ensemble for every bin pair."""
    if ensemble.signal.shape[0] < 2:
        raise EnsembleSizeError("need at least 2 pulses for covariance")
    freqs = freqs or ensemble.freqs
    data = np.hstack([ensemble.signal, ensemble.idler])
    cov = np.cov(data, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)

    om0 = freqs.omega0
    centers = ensemble.bins.centers
    edges = ensemble.bins.edges
    to_thz = 1.0 / (2.0 * np.pi * 1e12)
    return CovarianceMap(
        cov=cov,
        signal_axis_thz=(om0 + centers) * to_thz,
        idler_axis_thz=(om0 - centers) * to_thz,
        signal_edges_thz=(om0 + edges) * to_thz,
        idler_edges_thz=(om0 - edges) * to_thz,
        means_signal=ensemble.signal.mean(axis=0),
        means_idler=ensemble.idler.mean(axis=0),
        bin_width_thz=ensemble.bins.width_thz,
        ensemble_size=ensemble.signal.shape[0],
        detection_efficiency=ensemble.efficiency,
    )


@dataclass
class ModeRatio:
    """Total width over correlation width; a mode-count lower bound."""

    ratio: float
    lower_bound: bool             # True when the cross-section is bin-limited
    total_width_thz: float
    section_width_thz: float
    peak_bin: int


def mode_ratio(cov_map):
    """R = (marginal signal FWHM) / (idler cross-section FWHM).

    The cross-section is taken along the idler axis at the signal bin with
    the largest mean.  When the section width saturates at one bin, the
    returned ratio is a lower bound and is flagged as such.
    """
    marg = cov_map.means_signal
    if not np.any(marg > 0) or np.max(cov_map.cross) <= 0:
        raise StripeError("covariance map has no resolvable stripe")
    # marginal width on the signal axis (detuning order = axis order)
    x_sig = cov_map.signal_axis_thz
    lo, hi = _outer_half_crossings(x_sig, marg)
    total = abs(hi - lo)

    peak_bin = int(np.argmax(marg))
    section = cov_map.cross[peak_bin, :]
    # idler axis in THz, descending with bin index; use bin index * width
    x_bins = np.arange(section.size) * cov_map.bin_width_thz
    s_lo, s_hi = _outer_half_crossings(x_bins, np.maximum(section, 0.0))
    width = s_hi - s_lo
    # a single hot bin interpolates to ~1 bin wide; anything below 1.5 bins
    # cannot be distinguished from an unresolved cross-section
    limited = width <= 1.5 * cov_map.bin_width_thz
    section_w = max(width, cov_map.bin_width_thz)
    return ModeRatio(ratio=total / section_w, lower_bound=limited,
                     total_width_thz=total, section_width_thz=section_w,
                     peak_bin=peak_bin)


def stripe_mass_fraction(cov_map, band_bins=1):
    """Fraction of squared cross covariance within +-band_bins of the
    conjugate diagonal (bins are conjugate-aligned, so the stripe is
    |i - j| <= band).  Squaring makes the measure robust against the
    Monte-Carlo noise floor spread over the many off-stripe cells."""
    cross = cov_map.cross ** 2
    total = cross.sum()
    if total == 0:
        raise StripeError("covariance map is identically zero")
    i, j = np.indices(cross.shape)
    return float(cross[np.abs(i - j) <= band_bins].sum() / total)


# ---------------------------------------------------------------------------
# sum-frequency cross-correlation
# ---------------------------------------------------------------------------

@dataclass
class SfgTrace:
    """SFG intensity vs signal-idler delay, in arbitrary units.

    intensity = envelope * background_level + coherent; the envelope is
    the pulsed-pump pedestal (Gaussian auto-convolution, FWHM sqrt(2) x
    pulse FWHM) and background_level the constant CW pedestal.
    """

    delays_fs: np.ndarray
    intensity: np.ndarray
    background_level: float
    coherent: np.ndarray
    envelope: np.ndarray
    pulse_fwhm_ps: float


def _positive_branch(bog_field):
    keep = bog_field.detunings > 0
    om = bog_field.detunings[keep]
    if om.size == 0:
        raise ValueError("field has no positive-detuning support")
    a = bog_field.A[keep]
    b = bog_field.B[keep]
    delta = mismatch(om, bog_field.dispersion, bog_field.freqs)
    return om, a, b, np.atleast_1d(delta)


def _trapezoid_weights(om):
    if om.size == 1:
        return np.array([1.0])
    w = np.empty_like(om)
    w[1:-1] = 0.5 * (om[2:] - om[:-2])
    w[0] = 0.5 * (om[1] - om[0])
    w[-1] = 0.5 * (om[-1] - om[-2])
    return w


def _pedestal_envelope(tau_s, pulse_fwhm_ps):
    t_p = pulse_fwhm_ps * 1e-12
    return np.exp(-2.0 * np.log(2.0) * (tau_s / t_p) ** 2)


def sfg_trace(bog_field, delays_fs, pulse_fwhm_ps=18.0):
    """SFG trace by direct quadrature of the coherent integral.

    Raises SfgAliasingError when a requested delay exceeds pi/dOmega of
    the grid (the integral would alias).
    """
    om, a, b, delta = _positive_branch(bog_field)
    tau_s = np.asarray(delays_fs, dtype=float) * 1e-15
    if om.size > 1:
        d_om = np.min(np.diff(om))
        tau_max = np.pi / d_om
        if np.max(np.abs(tau_s), initial=0.0) > tau_max:
            raise SfgAliasingError(
                f"max |tau| {np.max(np.abs(tau_s)):.3g} s exceeds the grid's "
                f"unaliased range pi/dOmega = {tau_max:.3g} s"
            )
    w = _trapezoid_weights(om)
    length = bog_field.profile.length_mm
    f_core = a * b * np.exp(-1j * delta * length) * w
    background = 8.0 * np.dot(w, np.abs(b) ** 2) ** 2

    coherent = np.empty(tau_s.size)
    step = max(1, 4_000_000 // max(om.size, 1))
    for i in range(0, tau_s.size, step):
        phase = np.exp(1j * np.outer(tau_s[i:i + step], om))
        coherent[i:i + step] = 4.0 * np.abs(phase @ f_core) ** 2

    env = _pedestal_envelope(tau_s, pulse_fwhm_ps)
    return SfgTrace(delays_fs=np.asarray(delays_fs, dtype=float),
                    intensity=env * background + coherent,
                    background_level=float(background),
                    coherent=coherent, envelope=env,
                    pulse_fwhm_ps=pulse_fwhm_ps)


def sfg_trace_fft(bog_field, pulse_fwhm_ps=18.0, pad_factor=8):
    """SFG trace on the FFT-conjugate delay grid (cross-check engine).

    Requires a uniform positive-detuning grid; evaluates the same
    trapezoid sum as sfg_trace via zero-padded FFT, so both engines agree
    to rounding on shared delays.
    """
    om, a, b, delta = _positive_branch(bog_field)
    if om.size < 2:
        raise ValueError("FFT engine needs at least 2 positive detunings")
    d_all = np.diff(om)
    d_om = d_all[0]
    if not np.allclose(d_all, d_om, rtol=1e-9):
        raise ValueError("FFT engine needs a uniform detuning grid")
    w = _trapezoid_weights(om)
    length = bog_field.profile.length_mm
    f_core = a * b * np.exp(-1j * delta * length) * w
    background = 8.0 * np.dot(w, np.abs(b) ** 2) ** 2

    n_pad = 1 << int(np.ceil(np.log2(om.size * pad_factor)))
    spec_sum = n_pad * np.fft.ifft(f_core, n=n_pad)
    tau_s = np.fft.fftfreq(n_pad, d=d_om / (2.0 * np.pi))
    order = np.argsort(tau_s)
    tau_s = tau_s[order]
    c_tau = spec_sum[order] * np.exp(1j * om[0] * tau_s)
    coherent = 4.0 * np.abs(c_tau) ** 2

    env = _pedestal_envelope(tau_s, pulse_fwhm_ps)
    return SfgTrace(delays_fs=tau_s * 1e15,
                    intensity=env * background + coherent,
                    background_level=float(background),
                    coherent=coherent, envelope=env,
                    pulse_fwhm_ps=pulse_fwhm_ps)


@dataclass
class PeakMetrics:
    fwhm_fs: float
    asymmetry: float              # (right - left half-width) / (sum)
    peak_to_background: float
    tau_peak_fs: float


def peak_metrics(trace):
    """Width, skew and contrast of the isolated coherent peak."""
    y = trace.coherent
    tau = trace.delays_fs
    if y.size < 5 or np.max(y) <= 0:
        raise NoResolvablePeakError("no positive coherent component")
    i = int(np.argmax(y))
    if i == 0 or i == y.size - 1:
        raise NoResolvablePeakError("coherent maximum sits at the trace edge")
    half = y[i] / 2.0

    below_l = np.nonzero(y[:i] <= half)[0]
    below_r = np.nonzero(y[i:] <= half)[0]
    if below_l.size == 0 or below_r.size == 0:
        raise NoResolvablePeakError("half-maximum crossings not bracketed")
    l = below_l[-1]
    r = i + below_r[0]
    tau_lo = np.interp(half, [y[l], y[l + 1]], [tau[l], tau[l + 1]])
    tau_hi = np.interp(half, [y[r], y[r - 1]], [tau[r], tau[r - 1]])

    left = tau[i] - tau_lo
    right = tau_hi - tau[i]
    pedestal = trace.envelope[i] * trace.background_level
    contrast = float(y[i] / pedestal) if pedestal > 0 else float("inf")
    return PeakMetrics(fwhm_fs=float(tau_hi - tau_lo),
                       asymmetry=float((right - left) / (right + left)),
                       peak_to_background=contrast,
                       tau_peak_fs=float(tau[i]))
