import numpy as np
import pytest
from scipy.integrate import quad

from chirppdc.grating import (GratingDomainError, GratingProfile,
                              k_endpoint_slope, k_profile, k_span,
                              phase_integral)


def test_design_endpoints_exact(paper_profile):
    # -735/16 + 901 and -735/4 + 901; both exact in binary floats
    assert k_profile(0.0, paper_profile) == 855.0625
    assert k_profile(paper_profile.length_mm, paper_profile) == 717.25


def test_constant_profile_is_flat():
    prof = GratingProfile.periodic_reference(774.0)
    z = np.linspace(0.0, prof.length_mm, 17)
    assert np.all(k_profile(z, prof) == 774.0)


def test_phase_integral_closed_form(paper_profile):
    # beta L - (alpha L / 4)(1/(2 - 1) - 1/2) = 4505 - 459.375
    assert phase_integral(paper_profile.length_mm, paper_profile) == 4045.625
    assert phase_integral(0.0, paper_profile) == 0.0


def test_phase_integral_constant_kind():
    prof = GratingProfile.periodic_reference(774.0)
    assert phase_integral(2.5, prof) == 774.0 * 2.5


def test_phase_derivative_recovers_k(paper_profile):
    z = paper_profile.length_mm / 2.0
    h = 1e-4
    deriv = (phase_integral(z + h, paper_profile)
             - phase_integral(z - h, paper_profile)) / (2 * h)
    assert deriv == pytest.approx(k_profile(z, paper_profile), rel=1e-6)


def test_phase_integral_matches_quadrature(paper_profile):
    rng = np.random.default_rng(42)
    for z in rng.uniform(0.0, paper_profile.length_mm, 100):
        ref, _ = quad(lambda zz: k_profile(zz, paper_profile), 0.0, z,
                      epsabs=1e-13, epsrel=1e-13)
        assert phase_integral(z, paper_profile) == pytest.approx(ref, rel=1e-9)


def test_k_strictly_decreasing(paper_profile):
    z = np.linspace(0.0, paper_profile.length_mm, 5000)
    k = k_profile(z, paper_profile)
    assert np.all(np.diff(k) < 0)


def test_k_span_values(paper_profile):
    assert k_span(paper_profile) == 855.0625 - 717.25
    assert k_span(GratingProfile.periodic_reference()) == 0.0


def test_k_span_linear_in_alpha(paper_profile):
    doubled = GratingProfile(kind="hyperbolic", alpha=2 * paper_profile.alpha,
                             beta=paper_profile.beta,
                             length_mm=paper_profile.length_mm)
    assert k_span(doubled) == 2.0 * k_span(paper_profile)


def test_endpoint_slopes(paper_profile):
    # alpha/(2 L 2^3) at the entrance, alpha/(2 L) at the exit
    assert k_endpoint_slope(paper_profile, at_start=True) == pytest.approx(
        735.0 / (2 * 5.0 * 8.0), rel=1e-14)
    assert k_endpoint_slope(paper_profile, at_start=False) == pytest.approx(
        735.0 / (2 * 5.0), rel=1e-14)
    assert k_endpoint_slope(GratingProfile.periodic_reference()) == 0.0


@pytest.mark.parametrize("z", [-0.1, 5.1])
def test_domain_errors(paper_profile, z):
    with pytest.raises(GratingDomainError):
        k_profile(z, paper_profile)
    with pytest.raises(GratingDomainError):
        phase_integral(z, paper_profile)


def test_profile_validation():
    with pytest.raises(ValueError):
        GratingProfile(kind="sawtooth")
    with pytest.raises(ValueError):
        GratingProfile(length_mm=0.0)
    with pytest.raises(ValueError):
        GratingProfile(kind="hyperbolic", alpha=-1.0)
