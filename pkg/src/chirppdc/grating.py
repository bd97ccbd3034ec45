"""Aperiodic poling profile of the crystal and its accumulated phase.

The fabricated design varies the grating vector along the crystal as

    K(z) = -alpha / (4 (2 - z/L)^2) + beta,

which decreases monotonically from K(0) = beta - alpha/16 to
K(L) = beta - alpha/4.  A constant-K profile is provided as the
periodically poled reference sample.  Lengths in mm, K in rad/mm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HYPERBOLIC = "hyperbolic"
CONSTANT = "constant"


class GratingDomainError(ValueError):
    """Position z outside the crystal [0, L]."""


@dataclass(frozen=True)
class GratingProfile:
    kind: str = HYPERBOLIC
    alpha: float = 735.0        # rad/mm, hyperbolic profile strength
    beta: float = 901.0         # rad/mm, hyperbolic profile offset
    constant_k: float = 774.0   # rad/mm, used when kind == "constant"
    length_mm: float = 5.0

    def __post_init__(self):
        if self.kind not in (HYPERBOLIC, CONSTANT):
            raise ValueError(f"unknown grating kind {self.kind!r}")
        if self.length_mm <= 0:
            raise ValueError("crystal length must be positive")
        if self.kind == HYPERBOLIC and self.alpha <= 0:
            raise ValueError("hyperbolic profile needs alpha > 0 (monotone decrease)")

    @classmethod
    def paper_design(cls, length_mm=5.0):
        """The chirped 5 mm design: alpha=735, beta=901 rad/mm."""
        return cls(kind=HYPERBOLIC, alpha=735.0, beta=901.0, length_mm=length_mm)

    @classmethod
    def periodic_reference(cls, constant_k=774.0, length_mm=5.0):
        """Periodically poled reference sample of the same length."""
        return cls(kind=CONSTANT, constant_k=constant_k, length_mm=length_mm)


def _check_z(z, profile):
    zz = np.asarray(z, dtype=float)
    if np.any(zz < 0) or np.any(zz > profile.length_mm):
        raise GratingDomainError(
            f"z outside the crystal [0, {profile.length_mm:g}] mm"
        )
    return zz


def k_profile(z, profile):
    """Local grating vector K(z) in rad/mm, for z in [0, L] (mm)."""
    zz = _check_z(z, profile)
    if profile.kind == CONSTANT:
        k = np.full_like(zz, profile.constant_k)
    else:
        k = -profile.alpha / (4.0 * (2.0 - zz / profile.length_mm) ** 2) + profile.beta
    return k if k.ndim else float(k)


def phase_integral(z, profile):
    """Accumulated grating phase phi(z) = int_0^z K(z') dz', in rad.

    Closed form; phi(0) = 0.  The solver evaluates this at every step, so
    no quadrature is involved here (quadrature is a test oracle only).
    """
    zz = _check_z(z, profile)
    if profile.kind == CONSTANT:
        phi = profile.constant_k * zz
    else:
        length = profile.length_mm
        phi = (profile.beta * zz
               - (profile.alpha * length / 4.0)
               * (1.0 / (2.0 - zz / length) - 0.5))
    return phi if phi.ndim else float(phi)


def k_span(profile):
    """|K(0) - K(L)| in rad/mm; zero for constant profiles."""
    if profile.kind == CONSTANT:
        return 0.0
    return abs(k_profile(0.0, profile) - k_profile(profile.length_mm, profile))


def k_endpoint_slope(profile, at_start=True):
    """|dK/dz| at z=0 (or z=L) in rad/mm^2; zero for constant profiles.

    The inverse of this slope sets the local amplification exponent of the
    frequency phase-matched at that end of the crystal.
    """
    if profile.kind == CONSTANT:
        return 0.0
    z_rel = 0.0 if at_start else 1.0
    return profile.alpha / (2.0 * profile.length_mm * (2.0 - z_rel) ** 3)
