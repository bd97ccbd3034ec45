"""Coupled-mode integration of the two-mode squeezing coefficients.

For every detuning Omega the pair of coefficients (A, B) of the linear
input-output map  b(Omega, L) = A b(Omega, 0) + B b^dag(-Omega, 0)
is propagated through the crystal by integrating

    dA/dz  =  i g B* exp(+i theta(z)),
    dB*/dz = -i g* A exp(-i theta(z)),      theta(z) = Delta(Omega) z - phi(z),

with A(0) = 1, B(0) = 0 (vacuum input), phi the accumulated grating phase
and Delta the collinear wavevector mismatch.  The flow conserves
|A|^2 - |B|^2 = 1 exactly; the numerical defect of that invariant is the
primary quality diagnostic.

The integrator is an embedded Dormand-Prince 5(4) pair with per-point
adaptive steps, vectorized over the detuning grid.  Every grid point
evolves independently (step control uses only that point's error), and the
grid is processed in fixed-size chunks so results are bit-identical for
any worker count.  A fixed-step classic RK4 integrator is kept as the
cross-check oracle.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dispersion import DispersionModel, InteractionFrequencies, mismatch
from .grating import CONSTANT, GratingProfile, k_profile, k_span, phase_integral

# fixed chunk size decouples results from the worker count
_CHUNK = 64

# Dormand-Prince 5(4) tableau (propagates the 5th-order solution)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = _A[6]  # row 7 doubles as the 5th-order weights (FSAL pair)
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY, _MIN_FACTOR, _MAX_FACTOR = 0.9, 0.2, 10.0


class CouplingSpecError(ValueError):
    """Invalid coupling specification (g vs nu0)."""


class StepUnderflowError(RuntimeError):
    """Adaptive step collapsed below the floor (oscillation too fast)."""

    def __init__(self, detunings, max_detuning_minus_k):
        self.detunings = list(np.atleast_1d(detunings))
        self.max_detuning_minus_k = float(max_detuning_minus_k)
        super().__init__(
            f"step size underflow at {len(self.detunings)} detuning(s); "
            f"max |Delta - K| encountered: {self.max_detuning_minus_k:.6g} rad/mm. "
            "Increase max_step_mm or loosen tolerances."
        )


class GridSolveError(RuntimeError):
    """One or more grid points failed; carries the offending detunings."""

    def __init__(self, detunings, causes):
        self.detunings = detunings
        self.causes = causes
        super().__init__(
            f"{len(detunings)} grid point(s) failed to integrate; "
            f"first offending Omega = {detunings[0]:.6g} rad/s: {causes[0]}"
        )


@dataclass(frozen=True)
class DetuningGrid:
    """Detuning grid in rad/s.

    mirror=True duplicates the band [omega_min, omega_max] at negative
    detunings, giving a grid symmetric about Omega = 0 (required by the
    pulse-ensemble sampler); omega_min must then be > 0.  mirror=False
    yields a plain linspace(omega_min, omega_max, points).
    """

    omega_min: float
    omega_max: float
    points: int
    mirror: bool = True

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("grid needs at least one point")
        if self.omega_max <= self.omega_min:
            raise ValueError("omega_max must exceed omega_min")
        if self.mirror and self.omega_min <= 0:
            raise ValueError("mirrored grids need omega_min > 0")

    def detunings(self):
        pos = np.linspace(self.omega_min, self.omega_max, self.points)
        if not self.mirror:
            return pos
        return np.concatenate([-pos[::-1], pos])


@dataclass(frozen=True)
class SolverConfig:
    """Coupling, grid and error control for the coupled-mode solver.

    Exactly one of coupling_g (mm^-1, may be complex) and nu0
    (dimensionless amplification coefficient) must be given; the other is
    derived.  max_step_mm=None selects the automatic per-point cap
    2*pi / (10 max|Delta - K|), floor-limited to L/1e6.
    """

    grid: DetuningGrid
    coupling_g: complex | None = None
    nu0: float | None = None
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step_mm: float | None = None
    workers: int = 1

    def __post_init__(self):
        if (self.coupling_g is None) == (self.nu0 is None):
            raise CouplingSpecError("specify exactly one of coupling_g and nu0")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")

    def resolve_coupling(self, profile):
        """The coupling g in mm^-1 for the given grating profile."""
        if self.coupling_g is not None:
            return complex(self.coupling_g)
        return complex(coupling_from_nu0(self.nu0, profile))


@dataclass
class BogoliubovField:
    """Solved coefficients A(Omega, L), B(Omega, L) over a detuning grid."""

    detunings: np.ndarray          # rad/s, ascending
    A: np.ndarray                  # complex
    B: np.ndarray                  # complex
    coupling_g: complex            # mm^-1
    profile: GratingProfile
    dispersion: DispersionModel
    freqs: InteractionFrequencies
    rtol: float
    atol: float
    nu0: float | None = None

    def photons_per_mode(self):
        """Per-mode occupation N(Omega) = |B(Omega, L)|^2."""
        return np.abs(self.B) ** 2

    def symplectic_defect(self, relative=True):
        """Max deviation of |A|^2 - |B|^2 from 1 over the grid.

        relative=True divides each deviation by max(1, |A|^2): at high gain
        the invariant is only representable relative to the magnitude of
        the coefficients (|A|^2 carries ~1e8 and double precision holds
        ~16 digits), so the absolute defect saturates at the ulp level.
        """
        dev = np.abs(np.abs(self.A) ** 2 - np.abs(self.B) ** 2 - 1.0)
        if relative:
            dev = dev / np.maximum(1.0, np.abs(self.A) ** 2)
        return float(np.max(dev)) if dev.size else 0.0

    def is_mirror_symmetric(self):
        """True when every detuning has its exact negation on the grid."""
        d = self.detunings
        return bool(d.size % 2 == 0 and np.array_equal(d, -d[::-1]))


def coupling_from_nu0(nu0, profile):
    """|g| in mm^-1 from the amplification coefficient nu0 = |g|^2 L / |K(0)-K(L)|.

    Phase 0 by convention.  Constant profiles have zero span, so nu0 does
    not determine g there; specify the coupling directly instead.
    """
    span = k_span(profile)
    if span == 0.0:
        raise CouplingSpecError(
            "nu0 is undefined for a constant grating (|K(0)-K(L)| = 0); "
            "specify coupling_g directly"
        )
    if nu0 < 0:
        raise CouplingSpecError("nu0 must be non-negative")
    return float(np.sqrt(nu0 * span / profile.length_mm))


def nu0_from_coupling(coupling_g, profile):
    """Amplification coefficient |g|^2 L / |K(0)-K(L)| for the profile."""
    span = k_span(profile)
    if span == 0.0:
        raise CouplingSpecError("nu0 is undefined for a constant grating")
    return float(abs(coupling_g) ** 2 * profile.length_mm / span)


def _stage_sum(coeffs, k, count):
    """sum_j coeffs[j] * k[j] with a fixed evaluation order.

    Elementwise ufuncs only: the per-lane float stream is identical for
    any chunk size (BLAS reductions are not, which would break the
    bit-determinism contract of the grid solver).
    """
    acc = coeffs[0] * k[0]
    for j in range(1, count):
        if coeffs[j] != 0.0:
            acc = acc + coeffs[j] * k[j]
    return acc


def _phi_factory(profile):
    """Closed-form accumulated phase phi(z), vectorized, no domain checks."""
    if profile.kind == CONSTANT:
        kc = profile.constant_k
        return lambda z: kc * z
    alpha, beta, length = profile.alpha, profile.beta, profile.length_mm
    pref = alpha * length / 4.0
    return lambda z: beta * z - pref * (1.0 / (2.0 - z / length) - 0.5)


def _max_detuning_minus_k(delta, profile):
    """Per-point max_z |Delta - K(z)|; K is monotone so ends suffice."""
    if profile.kind == CONSTANT:
        return np.abs(delta - profile.constant_k)
    k0 = k_profile(0.0, profile)
    kl = k_profile(profile.length_mm, profile)
    return np.maximum(np.abs(delta - k0), np.abs(delta - kl))


def _auto_max_step(delta, profile):
    length = profile.length_mm
    m = _max_detuning_minus_k(delta, profile)
    with np.errstate(divide="ignore"):
        cap = np.where(m > 0, 2.0 * np.pi / (10.0 * m), np.inf)
    return np.clip(cap, length * 1e-6, length / 8.0)


def _integrate_chunk(detunings, g, profile, model, freqs, rtol, atol,
                     max_step_mm, record=False):
    """Adaptive DP5(4) over one chunk of detunings; per-point step control.

    Returns (A, B) arrays; with record=True (single point only) also the
    accepted-step trajectory as an (n_steps+1, 3) array of (z, A, B).
    """
    delta = np.atleast_1d(mismatch(detunings, model, freqs)).astype(float)
    n = delta.size
    length = profile.length_mm
    phi = _phi_factory(profile)

    if max_step_mm is None:
        max_step = _auto_max_step(delta, profile)
    else:
        max_step = np.full(n, float(max_step_mm))
    h_floor = length * 1e-12

    ig = 1j * g
    igc = -1j * np.conj(g)

    def rhs(z, y, dlt):
        theta = dlt * z - phi(z)
        e = np.exp(1j * theta)
        out = np.empty_like(y)
        out[:, 0] = ig * y[:, 1] * e
        out[:, 1] = igc * y[:, 0] * np.conj(e)
        return out

    # compressed working set; idx maps lanes back to chunk positions
    idx = np.arange(n)
    z = np.zeros(n)
    y = np.zeros((n, 2), dtype=complex)
    y[:, 0] = 1.0
    h = np.minimum(max_step, length / 100.0)
    dlt = delta.copy()
    mstep = max_step.copy()
    k1 = rhs(z, y, dlt)

    A_out = np.empty(n, dtype=complex)
    B_out = np.empty(n, dtype=complex)
    traj = [(0.0, 1.0 + 0.0j, 0.0 + 0.0j)] if (record and n == 1) else None

    k = np.empty((7, y.shape[0], 2), dtype=complex)
    while idx.size:
        m = idx.size
        if k.shape[1] != m:
            k = np.empty((7, m, 2), dtype=complex)
        last = h >= (length - z)
        h_eff = np.where(last, length - z, h)

        k[0] = k1
        for s in range(1, 7):
            zs = z + _C[s] * h_eff
            ys = y + h_eff[:, None] * _stage_sum(_A[s], k, s)
            k[s] = rhs(zs, ys, dlt)
        y_new = y + h_eff[:, None] * _stage_sum(_B5, k, 6)
        # k7 = f(z+h, y_new) for the error estimate (and FSAL reuse)
        z_new = np.where(last, length, z + h_eff)
        k[6] = rhs(z_new, y_new, dlt)
        err = h_eff[:, None] * _stage_sum(_E, k, 7)

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = np.sqrt(0.5 * np.sum((np.abs(err) / scale) ** 2, axis=1))

        accept = err_norm <= 1.0
        with np.errstate(divide="ignore"):
            factor = np.where(err_norm > 0.0,
                              _SAFETY * err_norm ** -0.2, _MAX_FACTOR)
        factor = np.where(accept,
                          np.minimum(_MAX_FACTOR, factor),
                          np.maximum(_MIN_FACTOR, np.minimum(1.0, factor)))
        h = np.minimum(h_eff * factor, mstep)

        z = np.where(accept, z_new, z)
        y = np.where(accept[:, None], y_new, y)
        k1 = np.where(accept[:, None], k[6], k1)

        if traj is not None and accept[0]:
            traj.append((float(z[0]), complex(y[0, 0]), complex(np.conj(y[0, 1]))))

        if np.any(h < h_floor):
            bad = h < h_floor
            raise StepUnderflowError(
                detunings=np.atleast_1d(detunings)[idx[bad]],
                max_detuning_minus_k=np.max(_max_detuning_minus_k(dlt[bad], profile)),
            )

        done = accept & (z >= length)
        if np.any(done):
            A_out[idx[done]] = y[done, 0]
            B_out[idx[done]] = np.conj(y[done, 1])
            keep = ~done
            idx, z, y, h, dlt, mstep, k1 = (
                idx[keep], z[keep], y[keep], h[keep],
                dlt[keep], mstep[keep], k1[keep],
            )

    if traj is not None:
        return A_out, B_out, traj
    return A_out, B_out


def _solve_chunk_task(args):
    return _integrate_chunk(*args)


def solve_one(detuning, config, profile,
              dispersion=DispersionModel(), freqs=InteractionFrequencies(),
              record=False):
    """Integrate a single detuning; returns (A, B) at z = L.

    record=True additionally returns the accepted-step trajectory as a
    list of (z_mm, A, B) rows (the CLI's debug dump).
    """
    g = config.resolve_coupling(profile)
    out = _integrate_chunk(
        np.array([float(detuning)]), g, profile, dispersion, freqs,
        config.rtol, config.atol, config.max_step_mm, record=record,
    )
    if record:
        a, b, traj = out
        return complex(a[0]), complex(b[0]), traj
    a, b = out
    return complex(a[0]), complex(b[0])


def solve_grid(config, profile,
               dispersion=DispersionModel(), freqs=InteractionFrequencies()):
    """Integrate every grid detuning; deterministic for any worker count.

    The grid is split into fixed 64-point chunks regardless of the worker
    count, so the float stream per point never depends on scheduling.
    """
    detunings = config.grid.detunings()
    g = config.resolve_coupling(profile)
    chunks = [detunings[i:i + _CHUNK] for i in range(0, detunings.size, _CHUNK)]
    tasks = [(c, g, profile, dispersion, freqs,
              config.rtol, config.atol, config.max_step_mm) for c in chunks]

    results, failures = [], []
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_solve_chunk_task, t) for t in tasks]
            for fut, chunk in zip(futures, chunks):
                try:
                    results.append(fut.result())
                except StepUnderflowError as exc:
                    failures.append((exc.detunings, exc))
    else:
        for t, chunk in zip(tasks, chunks):
            try:
                results.append(_solve_chunk_task(t))
            except StepUnderflowError as exc:
                failures.append((exc.detunings, exc))

    if failures:
        bad = [om for oms, _ in failures for om in oms]
        raise GridSolveError(bad, [exc for _, exc in failures])

    A = np.concatenate([r[0] for r in results])
    B = np.concatenate([r[1] for r in results])
    return BogoliubovField(
        detunings=detunings, A=A, B=B, coupling_g=g,
        profile=profile, dispersion=dispersion, freqs=freqs,
        rtol=config.rtol, atol=config.atol,
        nu0=config.nu0,
    )


def solve_one_rk4(detuning, coupling_g, profile, n_steps,
                  dispersion=DispersionModel(), freqs=InteractionFrequencies()):
    """Fixed-step classic RK4 reference integrator (cross-check oracle).

    Deliberately independent of the adaptive code path: own stage
    arithmetic, scalar throughout.
    """
    delta = mismatch(float(detuning), dispersion, freqs)
    length = profile.length_mm
    phi = _phi_factory(profile)
    g = complex(coupling_g)

    def f(z, a, c):
        e = np.exp(1j * (delta * z - phi(z)))
        return 1j * g * c * e, -1j * np.conj(g) * a / e

    h = length / n_steps
    z, a, c = 0.0, 1.0 + 0.0j, 0.0 + 0.0j
    for i in range(n_steps):
        z = i * h
        da1, dc1 = f(z, a, c)
        da2, dc2 = f(z + h / 2, a + h / 2 * da1, c + h / 2 * dc1)
        da3, dc3 = f(z + h / 2, a + h / 2 * da2, c + h / 2 * dc2)
        da4, dc4 = f(z + h, a + h * da3, c + h * dc3)
        a = a + h / 6 * (da1 + 2 * da2 + 2 * da3 + da4)
        c = c + h / 6 * (dc1 + 2 * dc2 + 2 * dc3 + dc4)
    return a, np.conj(c)
