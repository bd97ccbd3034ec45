import numpy as np
import pytest
from scipy.optimize import brentq

from chirppdc.bogolyubov import DetuningGrid, SolverConfig, solve_grid
from chirppdc.dispersion import DispersionModel, InteractionFrequencies, mismatch
from chirppdc.grating import GratingProfile

TWO_PI_THZ = 2.0 * np.pi * 1e12


@pytest.fixture(scope="session")
def model():
    return DispersionModel()


@pytest.fixture(scope="session")
def freqs():
    return InteractionFrequencies()


@pytest.fixture(scope="session")
def paper_profile():
    return GratingProfile.paper_design()


@pytest.fixture(scope="session")
def om_774(model, freqs):
    """Detuning (rad/s) where the mismatch equals 774 rad/mm."""
    return brentq(lambda om: mismatch(om, model, freqs) - 774.0,
                  20 * TWO_PI_THZ, 200 * TWO_PI_THZ, xtol=1e-2)


@pytest.fixture(scope="session")
def field_nu01(model, freqs, paper_profile):
    """Paper design at nu0 = 0.1 on the one-sided 300-point test grid."""
    grid = DetuningGrid(25.6 * TWO_PI_THZ, 157.4 * TWO_PI_THZ, 300,
                        mirror=False)
    cfg = SolverConfig(grid=grid, nu0=0.1)
    return solve_grid(cfg, paper_profile, model, freqs)


@pytest.fixture(scope="session")
def field_nu01_fine(model, freqs, paper_profile):
    """Denser one-sided grid for delay-domain tests (unaliased to ~1.6 ps)."""
    grid = DetuningGrid(25.6 * TWO_PI_THZ, 157.4 * TWO_PI_THZ, 420,
                        mirror=False)
    cfg = SolverConfig(grid=grid, nu0=0.1)
    return solve_grid(cfg, paper_profile, model, freqs)


@pytest.fixture(scope="session")
def field_nu01_mirror(model, freqs, paper_profile):
    """Mirrored band grid at nu0 = 0.1 for ensemble-sampling tests."""
    grid = DetuningGrid(70.0 * TWO_PI_THZ, 82.0 * TWO_PI_THZ, 240,
                        mirror=True)
    cfg = SolverConfig(grid=grid, nu0=0.1)
    return solve_grid(cfg, paper_profile, model, freqs)
