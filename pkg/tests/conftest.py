import numpy as np
import pytest

from ionstring import chain
from ionstring.constants import mass_from_amu, omega_from_hz


@pytest.fixture(scope="session")
def default_trap():
    """The workhorse trap: 51 Ca-like ions at the hardware frequencies."""
    return chain.TrapParameters(
        omega_x=omega_from_hz(2.93e6),
        omega_y=omega_from_hz(2.89e6),
        omega_z=omega_from_hz(127e3),
        ion_mass=mass_from_amu(40.0),
        ion_count=51,
    )


@pytest.fixture(scope="session")
def default_positions(default_trap):
    return chain.equilibrium_positions(default_trap)


def small_trap(n, omega_z_hz=127e3, omega_x_hz=2.93e6, omega_y_hz=2.89e6):
    return chain.TrapParameters(
        omega_x=omega_from_hz(omega_x_hz),
        omega_y=omega_from_hz(omega_y_hz),
        omega_z=omega_from_hz(omega_z_hz),
        ion_mass=mass_from_amu(40.0),
        ion_count=n,
    )


def bell_state():
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 1.0 / np.sqrt(2.0)
    return psi


def ghz_state(n=3):
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = psi[-1] = 1.0 / np.sqrt(2.0)
    return psi
