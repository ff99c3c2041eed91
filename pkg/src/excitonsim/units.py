"""Unit conventions and physical constants.

External data (network/bath files) carries spectroscopic units: energies in
cm^-1, distances in Angstrom, temperatures in K, rates in ps^-1.  All internal
dynamics runs in angular frequency (rad/ps, hbar = 1), so there is exactly one
conversion boundary: multiply a wavenumber by ``WAVENUMBER_TO_ANGULAR_PS``
on the way in.
"""

# 2*pi*c with c in cm/ps: angular frequency (rad/ps) per wavenumber (cm^-1)
WAVENUMBER_TO_ANGULAR_PS = 0.1883651567

# Boltzmann constant in spectroscopic units (cm^-1 per K)
BOLTZMANN_CM1_PER_K = 0.69503476


def cm1_to_angular(value_cm1):
    """Convert an energy/frequency in cm^-1 to angular frequency in rad/ps."""
    return value_cm1 * WAVENUMBER_TO_ANGULAR_PS


def angular_to_cm1(value_rad_ps):
    """Convert an angular frequency in rad/ps back to cm^-1."""
    return value_rad_ps / WAVENUMBER_TO_ANGULAR_PS


def thermal_energy_cm1(temperature_K):
    """k_B * T in cm^-1."""
    return BOLTZMANN_CM1_PER_K * temperature_K
